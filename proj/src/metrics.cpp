#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "error.hpp"

namespace adaptrace {

namespace {

double mean_of(const std::vector<double>& xs) {
  long double acc = 0.0L;
  for (double x : xs) acc += x;
  return static_cast<double>(acc / static_cast<long double>(xs.size()));
}

// Sample standard deviation (n - 1 denominator); xs.size() >= 2.
double sample_sd(const std::vector<double>& xs, double mean) {
  long double acc = 0.0L;
  for (double x : xs) {
    const long double d = static_cast<long double>(x) - mean;
    acc += d * d;
  }
  return static_cast<double>(
      std::sqrt(acc / static_cast<long double>(xs.size() - 1)));
}

// Quantile of a sorted vector with linear interpolation between order
// statistics (the common "type 7" definition). p in [0, 1].
double quantile_sorted(const std::vector<double>& xs, double p) {
  const double pos = p * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= xs.size()) return xs.back();
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] + frac * (xs[lo + 1] - xs[lo]);
}

// Inverse standard normal CDF, Acklam's rational approximation.
// Relative error below 1.15e-9 over (0, 1).
double normal_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
            a[5]) *
           q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
           c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace

const char* ci_method_name(CiMethod method) {
  switch (method) {
    case CiMethod::bootstrap:
      return "bootstrap";
    case CiMethod::normal_approx:
      return "normal_approx";
  }
  fail(errc::internal, "unknown interval method");
}

CiMethod ci_method_from_name(const std::string& name) {
  if (name == "bootstrap") return CiMethod::bootstrap;
  if (name == "normal_approx") return CiMethod::normal_approx;
  fail(errc::invalid_argument,
       "unknown interval method '" + name +
           "' (expected 'bootstrap' or 'normal_approx')");
}

double auroc(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size())
    fail(errc::invalid_argument,
         "labels and scores differ in length (" +
             std::to_string(labels.size()) + " vs " +
             std::to_string(scores.size()) + ")");
  const std::size_t n = labels.size();
  std::size_t num_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      fail(errc::invalid_argument,
           "label at index " + std::to_string(i) + " is " +
               std::to_string(labels[i]) + "; labels must be 0 or 1");
    if (!std::isfinite(scores[i]))
      fail(errc::invalid_argument,
           "score at index " + std::to_string(i) + " is not finite");
    if (labels[i] == 1) ++num_pos;
  }
  const std::size_t num_neg = n - num_pos;
  if (num_pos == 0 || num_neg == 0)
    fail(errc::invalid_argument,
         "AUROC undefined for single-class labels (" +
             std::to_string(num_pos) + " positive, " +
             std::to_string(num_neg) + " negative)");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return scores[l] < scores[r];
  });

  // Sum of positive-label midranks over tie groups. Ranks are 1-based, so a
  // group spanning sorted slots [i, j) has midrank (i + j + 1) / 2. All the
  // quantities below are half-integers well inside exact double range.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j + 1);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) pos_rank_sum += midrank;
    i = j;
  }

  const double pairs =
      static_cast<double>(num_pos) * static_cast<double>(num_neg);
  const double wins =
      pos_rank_sum -
      0.5 * static_cast<double>(num_pos) * static_cast<double>(num_pos + 1);
  // Divide the smaller of wins and losses so that reversing the score order
  // gives exactly one minus the original value.
  if (2.0 * wins <= pairs) return wins / pairs;
  return 1.0 - (pairs - wins) / pairs;
}

double auroc(const PredictionSet& predictions) {
  return auroc(std::span<const int>(predictions.labels),
               std::span<const double>(predictions.scores));
}

IntervalEstimate mean_ci(std::span<const double> samples, double confidence,
                         const CiOptions& options) {
  if (samples.empty())
    fail(errc::invalid_argument, "mean_ci needs at least one sample");
  if (!(confidence > 0.0 && confidence < 1.0))
    fail(errc::invalid_argument, "confidence must lie strictly between 0 and 1");
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (!std::isfinite(samples[i]))
      fail(errc::invalid_argument,
           "sample at index " + std::to_string(i) + " is not finite");
  if (options.method == CiMethod::bootstrap && options.bootstrap_samples < 1)
    fail(errc::invalid_argument, "bootstrap_samples must be positive");

  const std::size_t n = samples.size();
  // Sorting first makes every later floating-point operation see the samples
  // in one canonical order, so permuting the input cannot change the result.
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());

  IntervalEstimate est;
  est.confidence = confidence;
  est.n = static_cast<int>(n);
  est.mean = mean_of(sorted);

  if (n == 1) {
    est.ci_low = est.ci_high = est.mean;
    est.degenerate = true;
    return est;
  }
  if (sorted.front() == sorted.back()) {
    // All samples equal: every resample has the same mean.
    est.mean = sorted.front();
    est.ci_low = est.ci_high = est.mean;
    return est;
  }

  if (options.method == CiMethod::normal_approx) {
    const double z = normal_quantile(0.5 + confidence / 2.0);
    const double half =
        z * sample_sd(sorted, est.mean) / std::sqrt(static_cast<double>(n));
    est.ci_low = est.mean - half;
    est.ci_high = est.mean + half;
  } else {
    std::mt19937_64 engine(options.seed);
    std::vector<double> means(
        static_cast<std::size_t>(options.bootstrap_samples));
    for (double& m : means) {
      long double acc = 0.0L;
      for (std::size_t k = 0; k < n; ++k) acc += sorted[engine() % n];
      m = static_cast<double>(acc / static_cast<long double>(n));
    }
    std::sort(means.begin(), means.end());
    const double alpha = (1.0 - confidence) / 2.0;
    est.ci_low = quantile_sorted(means, alpha);
    est.ci_high = quantile_sorted(means, 1.0 - alpha);
  }

  // The interval must contain the mean; rounding or an extreme resample draw
  // must not be allowed to violate that.
  est.ci_low = std::min(est.ci_low, est.mean);
  est.ci_high = std::max(est.ci_high, est.mean);
  return est;
}

}  // namespace adaptrace
