// Command line for the adaptrace library. Talks to the library exclusively
// through its C interface.
//
// Exit codes: 0 success, 1 anything the user can correct (bad flags, bad
// input files, incomplete matrices), 2 internal failure.

#include <adaptrace.h>

#include <CLI11.hpp>

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <string>

namespace {

int exit_code_for(adt_status status) {
  switch (status) {
    case ADT_OK:
      return 0;
    case ADT_ERR_INTERNAL:
      return 2;
    default:
      return 1;
  }
}

int report_failure(adt_status status) {
  std::fprintf(stderr, "error: %s\n", adt_last_error());
  return exit_code_for(status);
}

struct MatrixHandle {
  adt_matrix* ptr = nullptr;
  ~MatrixHandle() { adt_matrix_free(ptr); }
};
struct ReportHandle {
  adt_report* ptr = nullptr;
  ~ReportHandle() { adt_report_free(ptr); }
};
struct ScenarioHandle {
  adt_scenario* ptr = nullptr;
  ~ScenarioHandle() { adt_scenario_free(ptr); }
};
struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { adt_string_free(ptr); }
};

constexpr adt_measurement kMeasurements[] = {
    ADT_MEASUREMENT_PERFORMANCE, ADT_MEASUREMENT_LEARNING,
    ADT_MEASUREMENT_POTENTIAL, ADT_MEASUREMENT_RETENTION};
constexpr const char* kMeasurementNames[] = {"performance", "learning",
                                             "potential", "retention"};

bool parse_report_format(const std::string& name, adt_report_format* out) {
  if (name == "structured") {
    *out = ADT_REPORT_FORMAT_STRUCTURED;
    return true;
  }
  if (name == "delimited") {
    *out = ADT_REPORT_FORMAT_DELIMITED;
    return true;
  }
  if (name == "plot-series") {
    *out = ADT_REPORT_FORMAT_PLOT_SERIES;
    return true;
  }
  std::fprintf(stderr,
               "error: unknown report format '%s' (expected 'structured', "
               "'delimited' or 'plot-series')\n",
               name.c_str());
  return false;
}

bool parse_matrix_format(const std::string& name, adt_matrix_format* out) {
  if (name == "delimited") {
    *out = ADT_MATRIX_FORMAT_DELIMITED;
    return true;
  }
  if (name == "structured") {
    *out = ADT_MATRIX_FORMAT_STRUCTURED;
    return true;
  }
  std::fprintf(stderr,
               "error: unknown matrix format '%s' (expected 'delimited' or "
               "'structured')\n",
               name.c_str());
  return false;
}

void print_report_summary(const adt_report* report) {
  const int steps = adt_report_num_steps(report);
  for (int step = 0; step < steps; ++step) {
    std::printf("step %d:", step);
    bool first = true;
    for (int m = 0; m < 4; ++m) {
      int has = 0;
      if (adt_report_has(report, step, kMeasurements[m], &has) != ADT_OK ||
          !has)
        continue;
      double mean = 0.0;
      double lo = 0.0;
      double hi = 0.0;
      if (adt_report_value(report, step, kMeasurements[m], &mean, &lo, &hi) !=
          ADT_OK)
        continue;
      std::printf("%s %s %.4f [%.4f, %.4f]", first ? "" : ",",
                  kMeasurementNames[m], mean, lo, hi);
      first = false;
    }
    std::printf("\n");
  }
  const size_t warnings = adt_report_num_warnings(report);
  for (size_t i = 0; i < warnings; ++i) {
    int step = 0;
    const char* message = nullptr;
    if (adt_report_warning(report, i, &step, &message) == ADT_OK)
      std::printf("warning (step %d): %s\n", step, message);
  }
  const size_t notes = adt_report_num_notes(report);
  for (size_t i = 0; i < notes; ++i) {
    int step = 0;
    const char* rule = nullptr;
    const char* message = nullptr;
    if (adt_report_note(report, i, &step, &rule, &message) == ADT_OK)
      std::printf("note (step %d, %s): %s\n", step, rule, message);
  }
}

struct ComputeArgs {
  std::string input;
  std::string output;
  std::string format = "structured";
  double lambda = 0.5;
  double confidence = 0.95;
  std::uint64_t seed = 42;
  int bootstrap_samples = 2000;
  std::string ci_method = "bootstrap";
};

int run_compute(const ComputeArgs& args) {
  MatrixHandle matrix;
  adt_status status =
      adt_matrix_read_file(args.input.c_str(), ADT_MATRIX_FORMAT_AUTO,
                           &matrix.ptr);
  if (status != ADT_OK) return report_failure(status);

  adt_compute_options options;
  adt_compute_options_init(&options);
  options.lambda = args.lambda;
  options.confidence = args.confidence;
  options.seed = args.seed;
  options.bootstrap_samples = args.bootstrap_samples;
  options.ci_method = args.ci_method == "normal_approx" ? ADT_CI_NORMAL_APPROX
                                                        : ADT_CI_BOOTSTRAP;

  ReportHandle report;
  status = adt_compute_report(matrix.ptr, &options, &report.ptr);
  if (status != ADT_OK) return report_failure(status);

  adt_report_format format = ADT_REPORT_FORMAT_STRUCTURED;
  if (!parse_report_format(args.format, &format)) return 1;

  if (!args.output.empty()) {
    status = adt_report_write_file(report.ptr, format, args.output.c_str());
    if (status != ADT_OK) return report_failure(status);
    print_report_summary(report.ptr);
    std::printf("wrote report to %s\n", args.output.c_str());
    return 0;
  }
  OwnedString text;
  status = adt_report_render(report.ptr, format, &text.ptr);
  if (status != ADT_OK) return report_failure(status);
  std::fputs(text.ptr, stdout);
  return 0;
}

struct SimulateArgs {
  std::string scenario;
  int repetitions = 25;
  std::uint64_t seed = 42;
  double scale = 0.2;
  std::string out;
  std::string format = "delimited";
  bool independent_samples = false;
  bool from_scratch = false;
};

int run_simulate(const SimulateArgs& args) {
  ScenarioHandle scenario;
  adt_status status = adt_scenario_preset(args.scenario.c_str(), &scenario.ptr);
  if (status != ADT_OK) return report_failure(status);

  status = adt_scenario_set_repetitions(scenario.ptr, args.repetitions);
  if (status != ADT_OK) return report_failure(status);
  status = adt_scenario_set_seed(scenario.ptr, args.seed);
  if (status != ADT_OK) return report_failure(status);
  status = adt_scenario_set_partition_scale(scenario.ptr, args.scale);
  if (status != ADT_OK) return report_failure(status);
  status = adt_scenario_set_reuse_samples(scenario.ptr,
                                          args.independent_samples ? 0 : 1);
  if (status != ADT_OK) return report_failure(status);
  status = adt_scenario_set_warm_start(scenario.ptr,
                                       args.from_scratch ? 0 : 1);
  if (status != ADT_OK) return report_failure(status);

  adt_matrix_format format = ADT_MATRIX_FORMAT_DELIMITED;
  if (!parse_matrix_format(args.format, &format)) return 1;

  MatrixHandle matrix;
  status = adt_scenario_run(scenario.ptr, &matrix.ptr);
  if (status != ADT_OK) return report_failure(status);

  if (!args.out.empty()) {
    status = adt_matrix_write_file(matrix.ptr, format, args.out.c_str());
    if (status != ADT_OK) return report_failure(status);
    std::printf("wrote matrix to %s (%d steps, %d repetitions)\n",
                args.out.c_str(), adt_matrix_num_steps(matrix.ptr),
                adt_matrix_num_repetitions(matrix.ptr));
    return 0;
  }
  OwnedString text;
  status = adt_matrix_render(matrix.ptr, format, &text.ptr);
  if (status != ADT_OK) return report_failure(status);
  std::fputs(text.ptr, stdout);
  return 0;
}

struct ReportArgs {
  std::string input;
  std::string output;
  std::string format = "delimited";
};

int run_report(const ReportArgs& args) {
  ReportHandle report;
  adt_status status = adt_report_read_file(args.input.c_str(), &report.ptr);
  if (status != ADT_OK) return report_failure(status);

  adt_report_format format = ADT_REPORT_FORMAT_DELIMITED;
  if (!parse_report_format(args.format, &format)) return 1;

  if (!args.output.empty()) {
    status = adt_report_write_file(report.ptr, format, args.output.c_str());
    if (status != ADT_OK) return report_failure(status);
    std::printf("wrote report to %s\n", args.output.c_str());
    return 0;
  }
  OwnedString text;
  status = adt_report_render(report.ptr, format, &text.ptr);
  if (status != ADT_OK) return report_failure(status);
  std::fputs(text.ptr, stdout);
  return 0;
}

struct ValidateArgs {
  std::string input;
};

int run_validate(const ValidateArgs& args) {
  MatrixHandle matrix;
  adt_status status =
      adt_matrix_read_file(args.input.c_str(), ADT_MATRIX_FORMAT_AUTO,
                           &matrix.ptr);
  if (status != ADT_OK) return report_failure(status);

  const char* metric = nullptr;
  double lo = 0.0;
  double hi = 0.0;
  status = adt_matrix_metric(matrix.ptr, &metric, &lo, &hi);
  if (status != ADT_OK) return report_failure(status);

  const int steps = adt_matrix_num_steps(matrix.ptr);
  std::printf("steps: %d, repetitions: %d, metric: %s [%g, %g]\n", steps,
              adt_matrix_num_repetitions(matrix.ptr), metric, lo, hi);

  bool complete = true;
  for (int step = 0; step < steps; ++step) {
    std::printf("step %d:", step);
    bool first = true;
    for (int m = 0; m < 4; ++m) {
      if (m > 0 && step == 0) continue;
      int supported = 0;
      status =
          adt_matrix_supports(matrix.ptr, kMeasurements[m], step, &supported);
      if (status != ADT_OK) return report_failure(status);
      if (supported) {
        std::printf("%s %s ok", first ? "" : ",", kMeasurementNames[m]);
      } else {
        complete = false;
        OwnedString missing;
        status = adt_matrix_missing(matrix.ptr, kMeasurements[m], step,
                                    &missing.ptr);
        if (status != ADT_OK) return report_failure(status);
        std::printf("%s %s missing %s", first ? "" : ",",
                    kMeasurementNames[m], missing.ptr);
      }
      first = false;
    }
    std::printf("\n");
  }
  std::printf("matrix is %s\n", complete ? "complete" : "incomplete");
  return complete ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluation measurements for sequentially modified models and "
               "datasets"};
  app.set_version_flag("--version", std::string(adt_version()));
  app.require_subcommand(1);

  ComputeArgs compute_args;
  CLI::App* compute =
      app.add_subcommand("compute", "Compute a measurement report from a "
                                    "cross-evaluation score matrix");
  compute->add_option("--input", compute_args.input,
                      "score matrix file (delimited or structured)")
      ->required();
  compute->add_option("--output", compute_args.output,
                      "report file to write (default: stdout)");
  compute->add_option("--format", compute_args.format,
                      "report format: structured, delimited or plot-series")
      ->capture_default_str();
  compute->add_option("--lambda", compute_args.lambda,
                      "retention decay constant")
      ->capture_default_str();
  compute->add_option("--confidence", compute_args.confidence,
                      "confidence level for intervals")
      ->capture_default_str();
  compute->add_option("--seed", compute_args.seed,
                      "seed for the interval bootstrap")
      ->capture_default_str();
  compute->add_option("--bootstrap-samples", compute_args.bootstrap_samples,
                      "bootstrap resample count")
      ->capture_default_str();
  compute->add_option("--ci-method", compute_args.ci_method,
                      "interval method: bootstrap or normal_approx")
      ->check(CLI::IsMember({"bootstrap", "normal_approx"}))
      ->capture_default_str();

  SimulateArgs simulate_args;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Run a built-in population-shift scenario and emit its "
                  "score matrix");
  simulate->add_option("--scenario", simulate_args.scenario,
                       "single-shift, single-shift-limited or double-shift")
      ->required();
  simulate->add_option("--reps", simulate_args.repetitions,
                       "number of repetitions")
      ->capture_default_str();
  simulate->add_option("--seed", simulate_args.seed, "base seed")
      ->capture_default_str();
  simulate->add_option("--scale", simulate_args.scale,
                       "partition size scale (1.0 = 525/75/150 per class)")
      ->capture_default_str();
  simulate->add_option("--out", simulate_args.out,
                       "matrix file to write (default: stdout)");
  simulate->add_option("--format", simulate_args.format,
                       "matrix format: delimited or structured")
      ->capture_default_str();
  simulate->add_flag("--independent-samples", simulate_args.independent_samples,
                     "draw every step's samples fresh instead of carrying "
                     "surviving samples between steps");
  simulate->add_flag("--from-scratch", simulate_args.from_scratch,
                     "retrain each step from a fresh initialization");

  ReportArgs report_args;
  CLI::App* report = app.add_subcommand(
      "report", "Re-emit a structured report in another format");
  report->add_option("--input", report_args.input, "structured report file")
      ->required();
  report->add_option("--output", report_args.output,
                     "file to write (default: stdout)");
  report->add_option("--format", report_args.format,
                     "output format: structured, delimited or plot-series")
      ->capture_default_str();

  ValidateArgs validate_args;
  CLI::App* validate = app.add_subcommand(
      "validate", "Check which measurements a score matrix can support");
  validate->add_option("--input", validate_args.input,
                       "score matrix file (delimited or structured)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (compute->parsed()) return run_compute(compute_args);
    if (simulate->parsed()) return run_simulate(simulate_args);
    if (report->parsed()) return run_report(report_args);
    if (validate->parsed()) return run_validate(validate_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
