/*
 * adaptrace: measurements for sequentially modified models and datasets.
 *
 * The library computes, from a cross-evaluation score matrix, how much a
 * model update actually helped on the data it was updated for (learning),
 * how much room the data change left for an update to help (potential), and
 * how well the current model still serves earlier data (retention), each
 * aggregated over repetitions with confidence intervals. A scenario runner
 * produces synthetic score matrices for population-shift studies.
 *
 * Conventions:
 *  - Every fallible call returns adt_status; ADT_OK is zero.
 *  - On failure, adt_last_error() returns a message describing the failure.
 *    The message is thread-local and valid until the next call on the same
 *    thread.
 *  - Objects are opaque; free them with the matching *_free function. Every
 *    *_free tolerates NULL.
 *  - Strings returned through char** are owned by the caller; release them
 *    with adt_string_free. Strings returned through const char** stay owned
 *    by the queried object and live as long as it does.
 */

#ifndef ADAPTRACE_H
#define ADAPTRACE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ADT_API __declspec(dllexport)
#else
#define ADT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum adt_status {
  ADT_OK = 0,
  ADT_ERR_INVALID_ARGUMENT = 1,
  ADT_ERR_INCOMPLETE = 2, /* matrix lacks cells a measurement needs */
  ADT_ERR_PARSE = 3,
  ADT_ERR_IO = 4,
  ADT_ERR_INTERNAL = 5
} adt_status;

typedef enum adt_measurement {
  ADT_MEASUREMENT_PERFORMANCE = 0,
  ADT_MEASUREMENT_LEARNING = 1,
  ADT_MEASUREMENT_POTENTIAL = 2,
  ADT_MEASUREMENT_RETENTION = 3
} adt_measurement;

typedef enum adt_matrix_format {
  ADT_MATRIX_FORMAT_DELIMITED = 0,  /* csv: model_step,dataset_step,repetition,score */
  ADT_MATRIX_FORMAT_STRUCTURED = 1, /* json object */
  ADT_MATRIX_FORMAT_AUTO = 2        /* sniff on input; invalid for output */
} adt_matrix_format;

typedef enum adt_report_format {
  ADT_REPORT_FORMAT_STRUCTURED = 0,  /* json; round-trips via adt_report_parse */
  ADT_REPORT_FORMAT_DELIMITED = 1,   /* csv, one wide row per step */
  ADT_REPORT_FORMAT_PLOT_SERIES = 2  /* csv, one row per step and series */
} adt_report_format;

typedef enum adt_ci_method {
  ADT_CI_BOOTSTRAP = 0,     /* percentile bootstrap over resampled means */
  ADT_CI_NORMAL_APPROX = 1  /* gaussian approximation */
} adt_ci_method;

typedef struct adt_matrix adt_matrix;
typedef struct adt_matrix_builder adt_matrix_builder;
typedef struct adt_report adt_report;
typedef struct adt_scenario adt_scenario;

/* ------------------------------------------------------------------ misc */

/* Library version string, e.g. "0.1.0". Static storage. */
ADT_API const char* adt_version(void);

/* Message of the most recent failure on this thread; empty string if the
 * most recent call succeeded. */
ADT_API const char* adt_last_error(void);

ADT_API void adt_string_free(char* s);

/* ---------------------------------------------------------------- matrix */

ADT_API adt_matrix_builder* adt_matrix_builder_new(void);
ADT_API void adt_matrix_builder_free(adt_matrix_builder* builder);

/* Names the metric and its closed score range. Default: "auroc" on [0, 1]. */
ADT_API adt_status adt_matrix_builder_metric(adt_matrix_builder* builder,
                                             const char* name, double lo,
                                             double hi);

/* Adds one score; rejects duplicates, negative indices, out-of-range and
 * non-finite scores. */
ADT_API adt_status adt_matrix_builder_add(adt_matrix_builder* builder,
                                          int model_step, int dataset_step,
                                          int repetition, double score);

/* Freezes the accumulated scores into a matrix. The builder stays valid and
 * can keep accumulating for a later build. */
ADT_API adt_status adt_matrix_builder_build(adt_matrix_builder* builder,
                                            adt_matrix** out);

ADT_API void adt_matrix_free(adt_matrix* matrix);

ADT_API adt_status adt_matrix_parse(const char* bytes, size_t len,
                                    adt_matrix_format format,
                                    adt_matrix** out);
ADT_API adt_status adt_matrix_read_file(const char* path,
                                        adt_matrix_format format,
                                        adt_matrix** out);
ADT_API adt_status adt_matrix_render(const adt_matrix* matrix,
                                     adt_matrix_format format, char** out);
ADT_API adt_status adt_matrix_write_file(const adt_matrix* matrix,
                                         adt_matrix_format format,
                                         const char* path);

ADT_API int adt_matrix_num_steps(const adt_matrix* matrix);
ADT_API int adt_matrix_num_repetitions(const adt_matrix* matrix);
ADT_API adt_status adt_matrix_metric(const adt_matrix* matrix,
                                     const char** name, double* lo,
                                     double* hi);

/* Score of one cell; ADT_ERR_INCOMPLETE when the cell is absent. */
ADT_API adt_status adt_matrix_score(const adt_matrix* matrix, int model_step,
                                    int dataset_step, int repetition,
                                    double* out);

/* *out = 1 when every cell `measurement` needs at `step` is present for all
 * repetitions, else 0. Learning, potential and retention are never supported
 * at step 0. */
ADT_API adt_status adt_matrix_supports(const adt_matrix* matrix,
                                       adt_measurement measurement, int step,
                                       int* out);

/* Description of the cells `measurement` is missing at `step`, grouped by
 * (model_step, dataset_step); empty string when nothing is missing. */
ADT_API adt_status adt_matrix_missing(const adt_matrix* matrix,
                                      adt_measurement measurement, int step,
                                      char** out);

/* ---------------------------------------------------------- measurements */

/* Normalized exponential-decay weights over prior versions 0..step-1,
 * written to out[0..step-1]. lambda = 0 gives uniform weights. */
ADT_API adt_status adt_decay_weights(int step, double lambda, double* out);

/* Single-repetition measurement values. Step 0 is invalid for all three. */
ADT_API adt_status adt_learning(const adt_matrix* matrix, int step,
                                int repetition, double* out);
ADT_API adt_status adt_potential(const adt_matrix* matrix, int step,
                                 int repetition, double* out);
ADT_API adt_status adt_retention(const adt_matrix* matrix, int step,
                                 double lambda, int repetition, double* out);

/* ----------------------------------------------------------------- stats */

/* Area under the ROC curve of binary labels (0/1) against scores; ties
 * between classes count one half. */
ADT_API adt_status adt_auroc(const int* labels, const double* scores, size_t n,
                             double* out);

/* Mean of n samples with a confidence interval. Any of mean/lo/hi may be
 * NULL. Deterministic in the seed and invariant under sample order. */
ADT_API adt_status adt_mean_ci(const double* samples, size_t n,
                               double confidence, adt_ci_method method,
                               int bootstrap_samples, uint64_t seed,
                               double* mean, double* lo, double* hi);

/* ---------------------------------------------------------------- report */

typedef struct adt_compute_options {
  double lambda;     /* retention decay constant; >= 0 */
  double confidence; /* interval confidence, in (0, 1) */
  adt_ci_method ci_method;
  int bootstrap_samples;
  uint64_t seed;
  /* reading-rule thresholds, as fractions of the metric range width */
  double potential_fraction;
  double retention_drop_fraction;
} adt_compute_options;

/* Fills in the defaults: lambda 0.5, confidence 0.95, bootstrap with 2000
 * resamples, seed 42, both rule thresholds 0.05. */
ADT_API void adt_compute_options_init(adt_compute_options* options);

/* Computes every applicable measurement at every step, aggregates over
 * repetitions, applies the reading rules and attaches provenance. options
 * may be NULL for defaults. Fails with ADT_ERR_INCOMPLETE (naming every
 * missing cell) when the matrix cannot support the full report. */
ADT_API adt_status adt_compute_report(const adt_matrix* matrix,
                                      const adt_compute_options* options,
                                      adt_report** out);

ADT_API void adt_report_free(adt_report* report);

ADT_API adt_status adt_report_render(const adt_report* report,
                                     adt_report_format format, char** out);
ADT_API adt_status adt_report_write_file(const adt_report* report,
                                         adt_report_format format,
                                         const char* path);

/* Structured format only. */
ADT_API adt_status adt_report_parse(const char* bytes, size_t len,
                                    adt_report** out);
ADT_API adt_status adt_report_read_file(const char* path, adt_report** out);

ADT_API int adt_report_num_steps(const adt_report* report);

/* *out = 1 when the report carries `measurement` at `step`. */
ADT_API adt_status adt_report_has(const adt_report* report, int step,
                                  adt_measurement measurement, int* out);

/* Aggregate of `measurement` at `step`. Any of mean/lo/hi may be NULL.
 * ADT_ERR_INVALID_ARGUMENT when the report does not carry it. */
ADT_API adt_status adt_report_value(const adt_report* report, int step,
                                    adt_measurement measurement, double* mean,
                                    double* lo, double* hi);

ADT_API size_t adt_report_num_warnings(const adt_report* report);
ADT_API adt_status adt_report_warning(const adt_report* report, size_t index,
                                      int* step, const char** message);

ADT_API size_t adt_report_num_notes(const adt_report* report);
ADT_API adt_status adt_report_note(const adt_report* report, size_t index,
                                   int* step, const char** rule,
                                   const char** message);

/* ------------------------------------------------------------- scenarios */

/* Builds a scenario from a preset name: "single-shift",
 * "single-shift-limited" or "double-shift". */
ADT_API adt_status adt_scenario_preset(const char* name, adt_scenario** out);
ADT_API void adt_scenario_free(adt_scenario* scenario);

ADT_API adt_status adt_scenario_set_repetitions(adt_scenario* scenario,
                                                int repetitions);
ADT_API adt_status adt_scenario_set_seed(adt_scenario* scenario,
                                         uint64_t seed);

/* Scales the study's split sizes (train 525, validation 75, test 150 per
 * class at scale 1.0; each scaled size is at least 1). */
ADT_API adt_status adt_scenario_set_partition_scale(adt_scenario* scenario,
                                                    double scale);

/* Nonzero: carry surviving samples between steps instead of redrawing. */
ADT_API adt_status adt_scenario_set_reuse_samples(adt_scenario* scenario,
                                                  int reuse);

/* Zero: retrain each step from a fresh initialization instead of continuing
 * from the previous step's parameters. */
ADT_API adt_status adt_scenario_set_warm_start(adt_scenario* scenario,
                                               int warm_start);

/* Runs every repetition and assembles the cross-evaluation matrix. */
ADT_API adt_status adt_scenario_run(const adt_scenario* scenario,
                                    adt_matrix** out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ADAPTRACE_H */
