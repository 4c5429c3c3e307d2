#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace adaptrace {

enum class Measurement { performance, learning, potential, retention };

const char* measurement_name(Measurement m);

/// Closed interval of scores the evaluation metric can produce.
struct MetricRange {
  double lo = 0.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool operator==(const MetricRange&) const = default;
};

/// Coordinate of one stored score: model version `model_step` evaluated on
/// the test split of dataset version `dataset_step`, in one repetition.
struct Cell {
  int model_step = 0;
  int dataset_step = 0;
  int repetition = 0;

  auto operator<=>(const Cell&) const = default;
};

// "(model_step=1, dataset_step=2)" with or without the repetition field.
std::string cell_label(const Cell& cell);
std::string pair_label(int model_step, int dataset_step);

/// Human-readable list of cells (assumed sorted), grouped by
/// (model_step, dataset_step) pair with a repetition count, e.g.
/// "(model_step=0, dataset_step=1) [3 repetitions]".
std::string describe_missing(const std::vector<Cell>& cells);

/// Cross-evaluation scores indexed by (model_step, dataset_step, repetition).
/// The matrix is sparse: only the cells a study actually evaluated are
/// present. Steps and repetitions are contiguous from zero; both bounds are
/// inferred from the largest index seen at build time. Immutable once built.
class ScoreMatrix {
 public:
  class Builder;

  int num_steps() const { return num_steps_; }
  int last_step() const { return num_steps_ - 1; }
  int num_repetitions() const { return num_repetitions_; }
  const std::string& metric_name() const { return metric_name_; }
  const MetricRange& metric_range() const { return metric_range_; }

  std::optional<double> find(int model_step, int dataset_step,
                             int repetition) const;

  /// Like find, but a missing cell is a completeness failure naming the cell.
  double at(int model_step, int dataset_step, int repetition) const;

  /// Whether every cell the measurement needs at `step` is present for every
  /// repetition. Learning, potential and retention are never supported at
  /// step 0 because they compare against earlier versions.
  bool supports(Measurement m, int step) const;

  /// The cells `supports` found absent, sorted. Empty when supported. For
  /// learning, potential and retention at step 0 the measurement is undefined
  /// rather than incomplete, so this fails instead of returning cells.
  std::vector<Cell> missing_cells(Measurement m, int step) const;

  const std::map<Cell, double>& entries() const { return entries_; }

  bool operator==(const ScoreMatrix&) const = default;

 private:
  friend class Builder;
  ScoreMatrix() = default;

  // Cells required by measurement m at `step` for one repetition, ignoring
  // the repetition field of the result.
  std::vector<Cell> required_cells(Measurement m, int step) const;
  void check_step(int step) const;

  std::map<Cell, double> entries_;
  std::string metric_name_ = "auroc";
  MetricRange metric_range_{};
  int num_steps_ = 0;
  int num_repetitions_ = 0;
};

/// Accumulates scores and validates them; build() freezes the result.
class ScoreMatrix::Builder {
 public:
  /// Names the metric and its admissible range. Default: auroc on [0, 1].
  Builder& metric(std::string name, MetricRange range);

  /// Adds one score. Fails on negative indices, duplicate cells, non-finite
  /// scores, and scores outside the metric range.
  Builder& add(int model_step, int dataset_step, int repetition, double score);

  bool contains(int model_step, int dataset_step, int repetition) const;

  /// Fails when no scores were added or the repetition set is ragged (some
  /// repetition index missing below the maximum seen).
  ScoreMatrix build() const;

 private:
  std::map<Cell, double> entries_;
  std::string metric_name_ = "auroc";
  MetricRange metric_range_{};
};

}  // namespace adaptrace
