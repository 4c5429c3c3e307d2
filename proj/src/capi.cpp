#include <adaptrace.h>

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "error.hpp"
#include "io.hpp"
#include "measurements.hpp"
#include "metrics.hpp"
#include "score_matrix.hpp"
#include "simulator.hpp"
#include "version.hpp"

struct adt_matrix {
  adaptrace::ScoreMatrix impl;
};
struct adt_matrix_builder {
  adaptrace::ScoreMatrix::Builder impl;
};
struct adt_report {
  adaptrace::Report impl;
};
struct adt_scenario {
  adaptrace::ScenarioConfig impl;
};

namespace {

thread_local std::string g_last_error;

adt_status to_status(adaptrace::errc code) {
  switch (code) {
    case adaptrace::errc::invalid_argument:
      return ADT_ERR_INVALID_ARGUMENT;
    case adaptrace::errc::incomplete:
      return ADT_ERR_INCOMPLETE;
    case adaptrace::errc::parse:
      return ADT_ERR_PARSE;
    case adaptrace::errc::io:
      return ADT_ERR_IO;
    case adaptrace::errc::internal:
      return ADT_ERR_INTERNAL;
  }
  return ADT_ERR_INTERNAL;
}

// Runs `body`, translating exceptions into statuses. No exception may cross
// the library boundary.
template <typename F>
adt_status wrap(F&& body) {
  try {
    body();
    g_last_error.clear();
    return ADT_OK;
  } catch (const adaptrace::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return ADT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ADT_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return ADT_ERR_INTERNAL;
  }
}

adt_status fail_invalid(const char* message) {
  g_last_error = message;
  return ADT_ERR_INVALID_ARGUMENT;
}

// malloc-backed copy so callers release with adt_string_free / free.
char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

adaptrace::Measurement to_measurement(adt_measurement m) {
  switch (m) {
    case ADT_MEASUREMENT_PERFORMANCE:
      return adaptrace::Measurement::performance;
    case ADT_MEASUREMENT_LEARNING:
      return adaptrace::Measurement::learning;
    case ADT_MEASUREMENT_POTENTIAL:
      return adaptrace::Measurement::potential;
    case ADT_MEASUREMENT_RETENTION:
      return adaptrace::Measurement::retention;
  }
  adaptrace::fail(adaptrace::errc::invalid_argument,
                  "unknown measurement selector");
}

adaptrace::MatrixFormat to_matrix_format(adt_matrix_format format,
                                         bool allow_auto,
                                         std::string_view bytes = {}) {
  switch (format) {
    case ADT_MATRIX_FORMAT_DELIMITED:
      return adaptrace::MatrixFormat::delimited;
    case ADT_MATRIX_FORMAT_STRUCTURED:
      return adaptrace::MatrixFormat::structured;
    case ADT_MATRIX_FORMAT_AUTO:
      if (allow_auto) return adaptrace::detect_matrix_format(bytes);
      adaptrace::fail(adaptrace::errc::invalid_argument,
                      "AUTO is only valid when reading");
  }
  adaptrace::fail(adaptrace::errc::invalid_argument,
                  "unknown matrix format selector");
}

adaptrace::ReportFormat to_report_format(adt_report_format format) {
  switch (format) {
    case ADT_REPORT_FORMAT_STRUCTURED:
      return adaptrace::ReportFormat::structured;
    case ADT_REPORT_FORMAT_DELIMITED:
      return adaptrace::ReportFormat::delimited;
    case ADT_REPORT_FORMAT_PLOT_SERIES:
      return adaptrace::ReportFormat::plot_series;
  }
  adaptrace::fail(adaptrace::errc::invalid_argument,
                  "unknown report format selector");
}

adaptrace::CiMethod to_ci_method(adt_ci_method method) {
  switch (method) {
    case ADT_CI_BOOTSTRAP:
      return adaptrace::CiMethod::bootstrap;
    case ADT_CI_NORMAL_APPROX:
      return adaptrace::CiMethod::normal_approx;
  }
  adaptrace::fail(adaptrace::errc::invalid_argument,
                  "unknown interval method selector");
}

const adaptrace::IntervalEstimate* find_estimate(const adt_report* report,
                                                 int step,
                                                 adt_measurement measurement) {
  const auto& points = report->impl.series.points;
  if (step < 0 || static_cast<std::size_t>(step) >= points.size())
    adaptrace::fail(adaptrace::errc::invalid_argument,
                    "step " + std::to_string(step) +
                        " outside report range [0, " +
                        std::to_string(points.size() - 1) + "]");
  const adaptrace::MeasurementPoint& point =
      points[static_cast<std::size_t>(step)];
  switch (measurement) {
    case ADT_MEASUREMENT_PERFORMANCE:
      return &point.performance;
    case ADT_MEASUREMENT_LEARNING:
      return point.learning ? &*point.learning : nullptr;
    case ADT_MEASUREMENT_POTENTIAL:
      return point.potential ? &*point.potential : nullptr;
    case ADT_MEASUREMENT_RETENTION:
      return point.retention ? &*point.retention : nullptr;
  }
  adaptrace::fail(adaptrace::errc::invalid_argument,
                  "unknown measurement selector");
}

}  // namespace

extern "C" {

const char* adt_version(void) { return adaptrace::kVersion; }

const char* adt_last_error(void) { return g_last_error.c_str(); }

void adt_string_free(char* s) { std::free(s); }

/* ---------------------------------------------------------------- matrix */

adt_matrix_builder* adt_matrix_builder_new(void) {
  return new (std::nothrow) adt_matrix_builder();
}

void adt_matrix_builder_free(adt_matrix_builder* builder) { delete builder; }

adt_status adt_matrix_builder_metric(adt_matrix_builder* builder,
                                     const char* name, double lo, double hi) {
  if (!builder) return fail_invalid("builder is NULL");
  if (!name) return fail_invalid("metric name is NULL");
  return wrap([&] { builder->impl.metric(name, adaptrace::MetricRange{lo, hi}); });
}

adt_status adt_matrix_builder_add(adt_matrix_builder* builder, int model_step,
                                  int dataset_step, int repetition,
                                  double score) {
  if (!builder) return fail_invalid("builder is NULL");
  return wrap([&] {
    builder->impl.add(model_step, dataset_step, repetition, score);
  });
}

adt_status adt_matrix_builder_build(adt_matrix_builder* builder,
                                    adt_matrix** out) {
  if (!builder) return fail_invalid("builder is NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap([&] { *out = new adt_matrix{builder->impl.build()}; });
}

void adt_matrix_free(adt_matrix* matrix) { delete matrix; }

adt_status adt_matrix_parse(const char* bytes, size_t len,
                            adt_matrix_format format, adt_matrix** out) {
  if (!bytes && len > 0) return fail_invalid("input bytes are NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap([&] {
    const std::string_view view(bytes ? bytes : "", len);
    *out = new adt_matrix{adaptrace::parse_score_matrix(
        view, to_matrix_format(format, true, view))};
  });
}

adt_status adt_matrix_read_file(const char* path, adt_matrix_format format,
                                adt_matrix** out) {
  if (!path) return fail_invalid("path is NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap([&] {
    const std::string bytes = adaptrace::read_file(path);
    *out = new adt_matrix{adaptrace::parse_score_matrix(
        bytes, to_matrix_format(format, true, bytes))};
  });
}

adt_status adt_matrix_render(const adt_matrix* matrix,
                             adt_matrix_format format, char** out) {
  if (!matrix) return fail_invalid("matrix is NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap([&] {
    *out = copy_string(adaptrace::write_score_matrix(
        matrix->impl, to_matrix_format(format, false)));
  });
}

adt_status adt_matrix_write_file(const adt_matrix* matrix,
                                 adt_matrix_format format, const char* path) {
  if (!matrix) return fail_invalid("matrix is NULL");
  if (!path) return fail_invalid("path is NULL");
  return wrap([&] {
    adaptrace::write_file(path, adaptrace::write_score_matrix(
                                    matrix->impl,
                                    to_matrix_format(format, false)));
  });
}

int adt_matrix_num_steps(const adt_matrix* matrix) {
  return matrix ? matrix->impl.num_steps() : 0;
}

int adt_matrix_num_repetitions(const adt_matrix* matrix) {
  return matrix ? matrix->impl.num_repetitions() : 0;
}

adt_status adt_matrix_metric(const adt_matrix* matrix, const char** name,
                             double* lo, double* hi) {
  if (!matrix) return fail_invalid("matrix is NULL");
  g_last_error.clear();
  if (name) *name = matrix->impl.metric_name().c_str();
  if (lo) *lo = matrix->impl.metric_range().lo;
  if (hi) *hi = matrix->impl.metric_range().hi;
  return ADT_OK;
}

adt_status adt_matrix_score(const adt_matrix* matrix, int model_step,
                            int dataset_step, int repetition, double* out) {
  if (!matrix) return fail_invalid("matrix is NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap(
      [&] { *out = matrix->impl.at(model_step, dataset_step, repetition); });
}

adt_status adt_matrix_supports(const adt_matrix* matrix,
                               adt_measurement measurement, int step,
                               int* out) {
  if (!matrix) return fail_invalid("matrix is NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap([&] {
    *out = matrix->impl.supports(to_measurement(measurement), step) ? 1 : 0;
  });
}

adt_status adt_matrix_missing(const adt_matrix* matrix,
                              adt_measurement measurement, int step,
                              char** out) {
  if (!matrix) return fail_invalid("matrix is NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap([&] {
    *out = copy_string(adaptrace::describe_missing(
        matrix->impl.missing_cells(to_measurement(measurement), step)));
  });
}

/* ---------------------------------------------------------- measurements */

adt_status adt_decay_weights(int step, double lambda, double* out) {
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap([&] {
    const std::vector<double> weights = adaptrace::decay_weights(step, lambda);
    std::memcpy(out, weights.data(), weights.size() * sizeof(double));
  });
}

adt_status adt_learning(const adt_matrix* matrix, int step, int repetition,
                        double* out) {
  if (!matrix) return fail_invalid("matrix is NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap([&] { *out = adaptrace::learning(matrix->impl, step, repetition); });
}

adt_status adt_potential(const adt_matrix* matrix, int step, int repetition,
                         double* out) {
  if (!matrix) return fail_invalid("matrix is NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap(
      [&] { *out = adaptrace::potential(matrix->impl, step, repetition); });
}

adt_status adt_retention(const adt_matrix* matrix, int step, double lambda,
                         int repetition, double* out) {
  if (!matrix) return fail_invalid("matrix is NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap([&] {
    *out = adaptrace::retention(matrix->impl, step, lambda, repetition);
  });
}

/* ----------------------------------------------------------------- stats */

adt_status adt_auroc(const int* labels, const double* scores, size_t n,
                     double* out) {
  if (!labels || !scores) return fail_invalid("labels or scores are NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap([&] {
    *out = adaptrace::auroc(std::span<const int>(labels, n),
                            std::span<const double>(scores, n));
  });
}

adt_status adt_mean_ci(const double* samples, size_t n, double confidence,
                       adt_ci_method method, int bootstrap_samples,
                       uint64_t seed, double* mean, double* lo, double* hi) {
  if (!samples) return fail_invalid("samples are NULL");
  return wrap([&] {
    adaptrace::CiOptions options;
    options.method = to_ci_method(method);
    options.bootstrap_samples = bootstrap_samples;
    options.seed = seed;
    const adaptrace::IntervalEstimate est = adaptrace::mean_ci(
        std::span<const double>(samples, n), confidence, options);
    if (mean) *mean = est.mean;
    if (lo) *lo = est.ci_low;
    if (hi) *hi = est.ci_high;
  });
}

/* ---------------------------------------------------------------- report */

void adt_compute_options_init(adt_compute_options* options) {
  if (!options) return;
  options->lambda = 0.5;
  options->confidence = 0.95;
  options->ci_method = ADT_CI_BOOTSTRAP;
  options->bootstrap_samples = 2000;
  options->seed = 42;
  options->potential_fraction = 0.05;
  options->retention_drop_fraction = 0.05;
}

adt_status adt_compute_report(const adt_matrix* matrix,
                              const adt_compute_options* options,
                              adt_report** out) {
  if (!matrix) return fail_invalid("matrix is NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap([&] {
    adt_compute_options defaults;
    adt_compute_options_init(&defaults);
    const adt_compute_options& opts = options ? *options : defaults;
    adaptrace::CiOptions ci;
    ci.method = to_ci_method(opts.ci_method);
    ci.bootstrap_samples = opts.bootstrap_samples;
    ci.seed = opts.seed;
    adaptrace::InterpretThresholds thresholds;
    thresholds.potential_fraction = opts.potential_fraction;
    thresholds.retention_drop_fraction = opts.retention_drop_fraction;
    *out = new adt_report{adaptrace::make_report(
        matrix->impl, opts.lambda, opts.confidence, ci, thresholds)};
  });
}

void adt_report_free(adt_report* report) { delete report; }

adt_status adt_report_render(const adt_report* report,
                             adt_report_format format, char** out) {
  if (!report) return fail_invalid("report is NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap([&] {
    *out = copy_string(
        adaptrace::write_report(report->impl, to_report_format(format)));
  });
}

adt_status adt_report_write_file(const adt_report* report,
                                 adt_report_format format, const char* path) {
  if (!report) return fail_invalid("report is NULL");
  if (!path) return fail_invalid("path is NULL");
  return wrap([&] {
    adaptrace::write_file(
        path, adaptrace::write_report(report->impl, to_report_format(format)));
  });
}

adt_status adt_report_parse(const char* bytes, size_t len, adt_report** out) {
  if (!bytes && len > 0) return fail_invalid("input bytes are NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap([&] {
    *out = new adt_report{
        adaptrace::parse_report(std::string_view(bytes ? bytes : "", len))};
  });
}

adt_status adt_report_read_file(const char* path, adt_report** out) {
  if (!path) return fail_invalid("path is NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap([&] {
    *out = new adt_report{adaptrace::parse_report(adaptrace::read_file(path))};
  });
}

int adt_report_num_steps(const adt_report* report) {
  return report ? static_cast<int>(report->impl.series.points.size()) : 0;
}

adt_status adt_report_has(const adt_report* report, int step,
                          adt_measurement measurement, int* out) {
  if (!report) return fail_invalid("report is NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap([&] { *out = find_estimate(report, step, measurement) ? 1 : 0; });
}

adt_status adt_report_value(const adt_report* report, int step,
                            adt_measurement measurement, double* mean,
                            double* lo, double* hi) {
  if (!report) return fail_invalid("report is NULL");
  return wrap([&] {
    const adaptrace::IntervalEstimate* est =
        find_estimate(report, step, measurement);
    if (!est)
      adaptrace::fail(adaptrace::errc::invalid_argument,
                      "report has no " +
                          std::string(adaptrace::measurement_name(
                              to_measurement(measurement))) +
                          " at step " + std::to_string(step));
    if (mean) *mean = est->mean;
    if (lo) *lo = est->ci_low;
    if (hi) *hi = est->ci_high;
  });
}

size_t adt_report_num_warnings(const adt_report* report) {
  return report ? report->impl.series.warnings.size() : 0;
}

adt_status adt_report_warning(const adt_report* report, size_t index,
                              int* step, const char** message) {
  if (!report) return fail_invalid("report is NULL");
  if (index >= report->impl.series.warnings.size())
    return fail_invalid("warning index out of range");
  g_last_error.clear();
  const adaptrace::SeriesWarning& w = report->impl.series.warnings[index];
  if (step) *step = w.step;
  if (message) *message = w.message.c_str();
  return ADT_OK;
}

size_t adt_report_num_notes(const adt_report* report) {
  return report ? report->impl.notes.size() : 0;
}

adt_status adt_report_note(const adt_report* report, size_t index, int* step,
                           const char** rule, const char** message) {
  if (!report) return fail_invalid("report is NULL");
  if (index >= report->impl.notes.size())
    return fail_invalid("note index out of range");
  g_last_error.clear();
  const adaptrace::Note& note = report->impl.notes[index];
  if (step) *step = note.step;
  if (rule) *rule = note.rule.c_str();
  if (message) *message = note.message.c_str();
  return ADT_OK;
}

/* ------------------------------------------------------------- scenarios */

adt_status adt_scenario_preset(const char* name, adt_scenario** out) {
  if (!name) return fail_invalid("preset name is NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap([&] {
    const std::optional<adaptrace::Preset> preset =
        adaptrace::preset_from_name(name);
    if (!preset) {
      std::string known;
      for (const adaptrace::Preset p : adaptrace::all_presets()) {
        if (!known.empty()) known += ", ";
        known += adaptrace::preset_name(p);
      }
      adaptrace::fail(adaptrace::errc::invalid_argument,
                      "unknown scenario '" + std::string(name) +
                          "' (known scenarios: " + known + ")");
    }
    *out = new adt_scenario{adaptrace::preset_config(*preset)};
  });
}

void adt_scenario_free(adt_scenario* scenario) { delete scenario; }

adt_status adt_scenario_set_repetitions(adt_scenario* scenario,
                                        int repetitions) {
  if (!scenario) return fail_invalid("scenario is NULL");
  if (repetitions < 1) return fail_invalid("repetitions must be >= 1");
  g_last_error.clear();
  scenario->impl.num_repetitions = repetitions;
  return ADT_OK;
}

adt_status adt_scenario_set_seed(adt_scenario* scenario, uint64_t seed) {
  if (!scenario) return fail_invalid("scenario is NULL");
  g_last_error.clear();
  scenario->impl.base_seed = seed;
  return ADT_OK;
}

adt_status adt_scenario_set_partition_scale(adt_scenario* scenario,
                                            double scale) {
  if (!scenario) return fail_invalid("scenario is NULL");
  return wrap([&] {
    scenario->impl.partition_sizes = adaptrace::scaled_partition_sizes(scale);
  });
}

adt_status adt_scenario_set_reuse_samples(adt_scenario* scenario, int reuse) {
  if (!scenario) return fail_invalid("scenario is NULL");
  g_last_error.clear();
  scenario->impl.reuse_samples = reuse != 0;
  return ADT_OK;
}

adt_status adt_scenario_set_warm_start(adt_scenario* scenario,
                                       int warm_start) {
  if (!scenario) return fail_invalid("scenario is NULL");
  g_last_error.clear();
  scenario->impl.warm_start = warm_start != 0;
  return ADT_OK;
}

adt_status adt_scenario_run(const adt_scenario* scenario, adt_matrix** out) {
  if (!scenario) return fail_invalid("scenario is NULL");
  if (!out) return fail_invalid("output pointer is NULL");
  return wrap(
      [&] { *out = new adt_matrix{adaptrace::run_scenario(scenario->impl)}; });
}

} /* extern "C" */
