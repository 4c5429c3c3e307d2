#include "measurements.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "error.hpp"
#include "rng.hpp"

namespace adaptrace {

namespace {

void check_defined_after_step0(int step, const char* name) {
  if (step < 1)
    fail(errc::invalid_argument,
         std::string(name) +
             " is undefined at step 0; there is no earlier version to "
             "compare against");
}

void check_repetition(const ScoreMatrix& matrix, int repetition) {
  if (repetition < 0 || repetition >= matrix.num_repetitions())
    fail(errc::invalid_argument,
         "repetition " + std::to_string(repetition) +
             " outside matrix range [0, " +
             std::to_string(matrix.num_repetitions() - 1) + "]");
}

void check_step_bounds(const ScoreMatrix& matrix, int step) {
  if (step < 0 || step > matrix.last_step())
    fail(errc::invalid_argument,
         "step " + std::to_string(step) + " outside matrix range [0, " +
             std::to_string(matrix.last_step()) + "]");
}

// The per-(step, measurement) interval estimate draws from its own random
// substream, so adding a step or measurement to a study never perturbs the
// intervals of the others.
CiOptions derived_options(const CiOptions& base, int step, Measurement m) {
  CiOptions out = base;
  out.seed = derive_seed(
      base.seed, static_cast<std::uint64_t>(step) * 8u +
                     static_cast<std::uint64_t>(static_cast<int>(m)));
  return out;
}

}  // namespace

std::vector<double> decay_weights(int step, double lambda) {
  if (step < 1)
    fail(errc::invalid_argument,
         "decay weights need at least one prior step; step " +
             std::to_string(step) + " has none");
  if (!std::isfinite(lambda) || lambda < 0.0)
    fail(errc::invalid_argument,
         "decay constant must be finite and nonnegative");
  std::vector<double> weights(static_cast<std::size_t>(step));
  long double total = 0.0L;
  for (int v = 0; v < step; ++v) {
    const double age = static_cast<double>((step - 1) - v);
    weights[static_cast<std::size_t>(v)] = std::exp(-lambda * age);
    total += weights[static_cast<std::size_t>(v)];
  }
  for (double& w : weights)
    w = static_cast<double>(static_cast<long double>(w) / total);
  return weights;
}

double learning(const ScoreMatrix& matrix, int step, int repetition) {
  check_defined_after_step0(step, "learning");
  check_step_bounds(matrix, step);
  check_repetition(matrix, repetition);
  return matrix.at(step, step, repetition) -
         matrix.at(step - 1, step, repetition);
}

double potential(const ScoreMatrix& matrix, int step, int repetition) {
  check_defined_after_step0(step, "potential");
  check_step_bounds(matrix, step);
  check_repetition(matrix, repetition);
  return matrix.at(step - 1, step - 1, repetition) -
         matrix.at(step - 1, step, repetition);
}

double retention(const ScoreMatrix& matrix, int step, double lambda,
                 int repetition) {
  check_defined_after_step0(step, "retention");
  check_step_bounds(matrix, step);
  check_repetition(matrix, repetition);
  const std::vector<double> weights = decay_weights(step, lambda);

  // Collect every absent prior cell before failing so the message names the
  // full gap, not just the first hole.
  std::vector<Cell> missing;
  for (int v = 0; v < step; ++v)
    if (!matrix.find(step, v, repetition))
      missing.push_back(Cell{step, v, repetition});
  if (!missing.empty())
    fail(errc::incomplete,
         "retention at step " + std::to_string(step) +
             " needs scores on every prior dataset; missing " +
             describe_missing(missing));

  long double acc = 0.0L;
  for (int v = 0; v < step; ++v)
    acc += static_cast<long double>(weights[static_cast<std::size_t>(v)]) *
           static_cast<long double>(*matrix.find(step, v, repetition));
  return static_cast<double>(acc);
}

MeasurementSeries measurement_series(const ScoreMatrix& matrix, double lambda,
                                     double confidence,
                                     const CiOptions& options) {
  if (!std::isfinite(lambda) || lambda < 0.0)
    fail(errc::invalid_argument,
         "decay constant must be finite and nonnegative");
  if (!(confidence > 0.0 && confidence < 1.0))
    fail(errc::invalid_argument, "confidence must lie strictly between 0 and 1");

  // Completeness sweep first. Everything any measurement will read is
  // verified before any arithmetic happens, and every gap is reported in one
  // message.
  std::set<Cell> missing_set;
  for (int step = 0; step <= matrix.last_step(); ++step) {
    for (const Measurement m :
         {Measurement::performance, Measurement::learning,
          Measurement::potential, Measurement::retention}) {
      if (m != Measurement::performance && step == 0) continue;
      for (const Cell& cell : matrix.missing_cells(m, step))
        missing_set.insert(cell);
    }
  }
  if (!missing_set.empty()) {
    const std::vector<Cell> missing(missing_set.begin(), missing_set.end());
    fail(errc::incomplete,
         "matrix is incomplete; missing " + describe_missing(missing));
  }

  const int reps = matrix.num_repetitions();
  MeasurementSeries series;
  series.lambda = lambda;
  series.confidence = confidence;
  series.metric_name = matrix.metric_name();
  series.metric_range = matrix.metric_range();
  series.num_repetitions = reps;

  std::vector<double> samples(static_cast<std::size_t>(reps));
  const auto aggregate = [&](Measurement m, int step,
                             auto&& value_of) -> IntervalEstimate {
    for (int r = 0; r < reps; ++r)
      samples[static_cast<std::size_t>(r)] = value_of(r);
    return mean_ci(samples, confidence, derived_options(options, step, m));
  };

  for (int step = 0; step <= matrix.last_step(); ++step) {
    MeasurementPoint point;
    point.step = step;
    point.performance = aggregate(Measurement::performance, step, [&](int r) {
      return matrix.at(step, step, r);
    });
    if (step >= 1) {
      point.learning = aggregate(Measurement::learning, step, [&](int r) {
        return learning(matrix, step, r);
      });
      point.potential = aggregate(Measurement::potential, step, [&](int r) {
        return potential(matrix, step, r);
      });
      point.retention = aggregate(Measurement::retention, step, [&](int r) {
        return retention(matrix, step, lambda, r);
      });
    }
    series.points.push_back(std::move(point));
    if (reps == 1)
      series.warnings.push_back(SeriesWarning{
          step,
          "only one repetition; confidence intervals are degenerate"});
  }
  return series;
}

}  // namespace adaptrace
