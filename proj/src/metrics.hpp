#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace adaptrace {

/// Binary classification outcome: labels (1 positive, 0 negative) paired with
/// real-valued scores where a higher score means more confidently positive.
struct PredictionSet {
  std::vector<int> labels;
  std::vector<double> scores;
};

/// Aggregate of repeated measurements. Invariant: ci_low <= mean <= ci_high.
/// `degenerate` marks intervals that collapsed to a point because only one
/// sample was available.
struct IntervalEstimate {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double confidence = 0.0;
  int n = 0;
  bool degenerate = false;

  bool operator==(const IntervalEstimate&) const = default;
};

enum class CiMethod { bootstrap, normal_approx };

struct CiOptions {
  CiMethod method = CiMethod::bootstrap;
  int bootstrap_samples = 2000;
  std::uint64_t seed = 42;

  bool operator==(const CiOptions&) const = default;
};

const char* ci_method_name(CiMethod method);
CiMethod ci_method_from_name(const std::string& name);

/// Area under the ROC curve, computed by the rank-sum formulation with
/// midranks so that a tie between a positive and a negative score counts
/// one half. Fails when labels and scores differ in length, any label is
/// outside {0, 1}, any score is not finite, or only one class is present.
double auroc(std::span<const int> labels, std::span<const double> scores);
double auroc(const PredictionSet& predictions);

/// Mean of `samples` with a confidence interval. The default method is the
/// percentile bootstrap over resampled means; the normal approximation is
/// available as an alternative. Deterministic for a given seed and invariant
/// under permutations of `samples`. One sample yields a degenerate interval.
IntervalEstimate mean_ci(std::span<const double> samples, double confidence,
                         const CiOptions& options = {});

}  // namespace adaptrace
