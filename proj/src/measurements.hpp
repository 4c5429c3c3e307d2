#pragma once

#include <optional>
#include <string>
#include <vector>

#include "metrics.hpp"
#include "score_matrix.hpp"

namespace adaptrace {

/// Weights over the prior dataset versions 0..step-1 used by retention.
/// Weight of version v decays exponentially with its age (step-1) - v, so the
/// most recent prior version carries the most weight; lambda = 0 makes all
/// prior versions count equally. The weights are normalized to sum to 1.
/// Requires step >= 1 and a finite lambda >= 0.
std::vector<double> decay_weights(int step, double lambda);

/// Score change on the current dataset attributable to the model update:
/// the current model's score on the current data minus the previous model's
/// score on the same data. Positive means the update helped on current data.
/// Undefined at step 0.
double learning(const ScoreMatrix& matrix, int step, int repetition);

/// Headroom the previous model left on the new data: its score on the
/// previous dataset minus its score on the current dataset. Positive means
/// the data changed in a way the old model does not cover, so an update has
/// room to help. Undefined at step 0.
double potential(const ScoreMatrix& matrix, int step, int repetition);

/// Decay-weighted average of the current model's scores across all prior
/// dataset versions; high retention means earlier populations still score
/// well under the current model. Undefined at step 0.
double retention(const ScoreMatrix& matrix, int step, double lambda,
                 int repetition);

/// All measurements for one step, each aggregated over repetitions.
/// Learning, potential and retention are absent exactly at step 0.
struct MeasurementPoint {
  int step = 0;
  IntervalEstimate performance;
  std::optional<IntervalEstimate> learning;
  std::optional<IntervalEstimate> potential;
  std::optional<IntervalEstimate> retention;

  bool operator==(const MeasurementPoint&) const = default;
};

struct SeriesWarning {
  int step = 0;
  std::string message;

  bool operator==(const SeriesWarning&) const = default;
};

/// Per-step measurement aggregates for a whole study, ordered by step.
struct MeasurementSeries {
  std::vector<MeasurementPoint> points;
  double lambda = 0.5;
  double confidence = 0.95;
  std::string metric_name = "auroc";
  MetricRange metric_range{};
  int num_repetitions = 0;
  std::vector<SeriesWarning> warnings;

  bool operator==(const MeasurementSeries&) const = default;
};

/// Computes every applicable measurement at every step and aggregates over
/// repetitions. The matrix is checked up front: if any required cell is
/// absent the call fails with a message listing every missing cell, so one
/// round trip reports everything an evaluation still has to produce.
/// Single-repetition matrices yield degenerate intervals plus a warning per
/// step.
MeasurementSeries measurement_series(const ScoreMatrix& matrix, double lambda,
                                     double confidence,
                                     const CiOptions& options = {});

}  // namespace adaptrace
