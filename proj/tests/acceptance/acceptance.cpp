// Acceptance gate for the shipped guarantees. Each check prints exactly one
// PASS or FAIL line; the process exits nonzero when any check fails. All
// tolerances are pinned here, next to the check that uses them.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "io.hpp"
#include "measurements.hpp"
#include "metrics.hpp"
#include "score_matrix.hpp"
#include "simulator.hpp"

namespace fs = std::filesystem;
using namespace adaptrace;

namespace {

// Exact-identity tolerance shared by the algebraic checks.
constexpr double kExactTol = 1e-12;
// Trend limits for the synthetic studies.
constexpr double kGapLimit = 0.05;     // mean |learning - potential| per step
constexpr double kSpreadLimit = 0.05;  // performance range across steps
constexpr double kRuntimeBudgetSeconds = 120.0;

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("adaptrace_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out_path = work_dir() / ("out." + std::to_string(counter));
  const fs::path err_path = work_dir() / ("err." + std::to_string(counter));
  ++counter;
  const std::string command = std::string("'") + ADAPTRACE_CLI_PATH + "' " +
                              args + " > '" + out_path.string() + "' 2> '" +
                              err_path.string() + "'";
  const int raw = std::system(command.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

// Random complete matrix: lower triangle plus each stale model on the next
// step's dataset, which is exactly what the measurements consume.
ScoreMatrix random_matrix(std::mt19937_64& rng) {
  const int steps = 2 + static_cast<int>(rng() % 4);
  const int reps = 1 + static_cast<int>(rng() % 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ScoreMatrix::Builder builder;
  for (int rep = 0; rep < reps; ++rep)
    for (int v = 0; v < steps; ++v) {
      for (int w = 0; w <= v; ++w) builder.add(v, w, rep, unit(rng));
      if (v >= 1) builder.add(v - 1, v, rep, unit(rng));
    }
  return builder.build();
}

Report random_report(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Report report;
  report.series.lambda = 2.0 * unit(rng);
  report.series.confidence = 0.5 + 0.49 * unit(rng);
  report.series.num_repetitions = 1 + static_cast<int>(rng() % 3);
  report.series.metric_name = (rng() % 2) ? "auroc" : "accuracy";
  report.series.metric_range =
      (rng() % 4) ? MetricRange{0.0, 1.0} : MetricRange{-1.0, 1.0};
  report.ci.method =
      (rng() % 2) ? CiMethod::bootstrap : CiMethod::normal_approx;
  report.ci.bootstrap_samples = 100 + static_cast<int>(rng() % 2000);
  report.ci.seed = rng();
  report.thresholds.potential_fraction = 0.2 * unit(rng);
  report.thresholds.retention_drop_fraction = 0.2 * unit(rng);

  const auto interval = [&] {
    const double a = unit(rng);
    const double b = unit(rng);
    const double c = unit(rng);
    IntervalEstimate est;
    est.ci_low = std::min({a, b, c});
    est.ci_high = std::max({a, b, c});
    est.mean = a + b + c - est.ci_low - est.ci_high;
    est.confidence = report.series.confidence;
    est.n = report.series.num_repetitions;
    est.degenerate = est.n == 1;
    return est;
  };

  const int steps = 1 + static_cast<int>(rng() % 4);
  for (int s = 0; s < steps; ++s) {
    MeasurementPoint point;
    point.step = s;
    point.performance = interval();
    if (s >= 1) {
      if (rng() % 2) point.learning = interval();
      if (rng() % 2) point.potential = interval();
      if (rng() % 2) point.retention = interval();
    }
    report.series.points.push_back(std::move(point));
  }
  if (rng() % 2)
    report.series.warnings.push_back(
        SeriesWarning{0, "only one repetition; intervals are degenerate"});
  if (rng() % 2)
    report.notes.push_back(
        Note{static_cast<int>(rng() % steps), "high-potential",
             "a population shift may be under way"});
  report.provenance.input_digest = digest_bytes("acceptance");
  report.provenance.tool_version = "0.1.0";
  return report;
}

double pair_count_auroc(const std::vector<int>& labels,
                        const std::vector<double>& scores) {
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

std::vector<double> step_means(const ScoreMatrix& matrix,
                               double (*value)(const ScoreMatrix&, int, int),
                               int first_step) {
  std::vector<double> means;
  for (int step = first_step; step < matrix.num_steps(); ++step) {
    double total = 0.0;
    for (int rep = 0; rep < matrix.num_repetitions(); ++rep)
      total += value(matrix, step, rep);
    means.push_back(total / matrix.num_repetitions());
  }
  return means;
}

// ------------------------------------------------------------------ checks

bool check_two_step_goldens(std::string& detail) {
  const auto two_step = [](double stale) {
    ScoreMatrix::Builder builder;
    builder.add(0, 0, 0, 0.6);
    builder.add(1, 1, 0, 0.8);
    builder.add(0, 1, 0, stale);
    builder.add(1, 0, 0, 0.7);
    return builder.build();
  };
  // Stale model already strong on the new data: the update changed nothing
  // and the data got easier for it.
  const ScoreMatrix a = two_step(0.8);
  // Stale model weak on the new data: the update earned the whole rise.
  const ScoreMatrix b = two_step(0.6);
  const double cases[4][2] = {
      {learning(a, 1, 0), 0.0},
      {potential(a, 1, 0), -0.2},
      {learning(b, 1, 0), 0.2},
      {potential(b, 1, 0), 0.0},
  };
  double worst = 0.0;
  for (const auto& c : cases) worst = std::max(worst, std::fabs(c[0] - c[1]));
  char buf[64];
  std::snprintf(buf, sizeof buf, "max deviation %.1e (tol %.0e)", worst,
                kExactTol);
  detail = buf;
  return worst <= kExactTol;
}

bool check_decomposition_identity(std::string& detail) {
  // learning minus potential telescopes to the change in on-version score:
  // (S(V,V) - S(V-1,V)) - (S(V-1,V-1) - S(V-1,V)) = S(V,V) - S(V-1,V-1).
  // The two-step goldens fix the signs: scenario A has learning 0 and
  // potential -0.2 while its on-version score rises by 0.2, which only the
  // difference reproduces.
  std::mt19937_64 rng(20240501);
  double worst = 0.0;
  for (int round = 0; round < 1000; ++round) {
    const ScoreMatrix matrix = random_matrix(rng);
    for (int step = 1; step < matrix.num_steps(); ++step)
      for (int rep = 0; rep < matrix.num_repetitions(); ++rep) {
        const double lhs = learning(matrix, step, rep) -
                           potential(matrix, step, rep);
        const double rhs = matrix.at(step, step, rep) -
                           matrix.at(step - 1, step - 1, rep);
        worst = std::max(worst, std::fabs(lhs - rhs));
      }
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "1000 matrices, max residual %.1e", worst);
  detail = buf;
  return worst <= kExactTol;
}

bool check_decay_weights(std::string& detail) {
  for (int step = 1; step <= 10; ++step)
    for (const double lambda : {0.0, 0.25, 0.5, 1.0, 5.0}) {
      const std::vector<double> weights = decay_weights(step, lambda);
      double total = 0.0;
      for (const double w : weights) total += w;
      if (std::fabs(total - 1.0) > kExactTol) {
        detail = "weights do not sum to 1 at step " + std::to_string(step);
        return false;
      }
      if (lambda == 0.0)
        for (const double w : weights)
          if (std::fabs(w - 1.0 / step) > kExactTol) {
            detail = "lambda 0 is not uniform at step " + std::to_string(step);
            return false;
          }
    }

  // Retention is a weighted average, so it can never leave the hull of the
  // current model's scores on prior datasets.
  std::mt19937_64 rng(77);
  for (int round = 0; round < 200; ++round) {
    const ScoreMatrix matrix = random_matrix(rng);
    const double lambda = 5.0 * (rng() % 1000) / 1000.0;
    for (int step = 1; step < matrix.num_steps(); ++step)
      for (int rep = 0; rep < matrix.num_repetitions(); ++rep) {
        double lo = 1.0;
        double hi = 0.0;
        for (int prior = 0; prior < step; ++prior) {
          const double s = matrix.at(step, prior, rep);
          lo = std::min(lo, s);
          hi = std::max(hi, s);
        }
        const double r = retention(matrix, step, lambda, rep);
        if (r < lo - kExactTol || r > hi + kExactTol) {
          detail = "retention left [min, max] at step " + std::to_string(step);
          return false;
        }
      }
  }
  detail = "50 weight vectors, 200 retention matrices";
  return true;
}

bool check_auroc_oracle(std::string& detail) {
  std::mt19937_64 rng(424242);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int round = 0; round < 1000; ++round) {
    const int n = 2 + static_cast<int>(rng() % 49);
    std::vector<int> labels(n);
    std::vector<double> scores(n);
    for (int i = 0; i < n; ++i) labels[i] = static_cast<int>(rng() % 2);
    labels[0] = 1;  // both classes present
    labels[1] = 0;
    const bool coarse = round % 2 == 0;  // force ties half the time
    for (int i = 0; i < n; ++i)
      scores[i] = coarse ? (rng() % 5) / 4.0 : unit(rng);

    const double fast = auroc(labels, scores);
    const double slow = pair_count_auroc(labels, scores);
    worst = std::max(worst, std::fabs(fast - slow));

    // Strictly increasing transforms leave the ranking untouched, so the
    // result must not move at all.
    std::vector<double> affine(scores);
    std::vector<double> curved(scores);
    for (int i = 0; i < n; ++i) {
      affine[i] = 3.0 * scores[i] + 1.0;
      curved[i] = std::exp(scores[i]);
    }
    if (auroc(labels, affine) != fast || auroc(labels, curved) != fast) {
      detail = "monotone transform moved the value in round " +
               std::to_string(round);
      return false;
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "1000 prediction sets, max deviation %.1e",
                worst);
  detail = buf;
  return worst <= kExactTol;
}

bool check_single_shift_trend(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  const ScenarioConfig config = preset_config(Preset::single_shift);
  const ScoreMatrix matrix = run_scenario(config);
  const MeasurementSeries series = measurement_series(matrix, 0.5, 0.95);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  double worst_gap = 0.0;
  for (int step = 1; step < matrix.num_steps(); ++step) {
    double gap = 0.0;
    for (int rep = 0; rep < matrix.num_repetitions(); ++rep)
      gap += std::fabs(learning(matrix, step, rep) -
                       potential(matrix, step, rep));
    worst_gap = std::max(worst_gap, gap / matrix.num_repetitions());
  }

  double perf_lo = 1.0;
  double perf_hi = 0.0;
  for (const MeasurementPoint& point : series.points) {
    perf_lo = std::min(perf_lo, point.performance.mean);
    perf_hi = std::max(perf_hi, point.performance.mean);
  }
  const double spread = perf_hi - perf_lo;

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "max gap %.4f (limit %.2f), spread %.4f (limit %.2f), "
                "%.1fs (budget %.0fs)",
                worst_gap, kGapLimit, spread, kSpreadLimit, seconds,
                kRuntimeBudgetSeconds);
  detail = buf;
  return worst_gap <= kGapLimit && spread < kSpreadLimit &&
         seconds < kRuntimeBudgetSeconds;
}

bool check_limited_plasticity_trend(std::string& detail) {
  const ScenarioConfig config = preset_config(Preset::single_shift_limited);
  const ScoreMatrix matrix = run_scenario(config);
  const MeasurementSeries series = measurement_series(matrix, 0.5, 0.95);

  for (std::size_t step = 1; step < series.points.size(); ++step) {
    const MeasurementPoint& point = series.points[step];
    if (!(point.learning->mean < point.potential->mean)) {
      detail = "learning reached potential at step " + std::to_string(step);
      return false;
    }
  }
  if (!(series.points.back().performance.mean <
        series.points.front().performance.mean)) {
    detail = "performance did not decline across the shift";
    return false;
  }
  double min_overlap = 1.0;
  for (std::size_t step = 2; step < series.points.size(); ++step) {
    const IntervalEstimate& prev = *series.points[step - 1].retention;
    const IntervalEstimate& cur = *series.points[step].retention;
    // Overlap margin: smallest slack of the two one-sided comparisons.
    min_overlap = std::min({min_overlap, prev.ci_high - cur.ci_low,
                            cur.ci_high - prev.ci_low});
    if (cur.ci_low > prev.ci_high || prev.ci_low > cur.ci_high) {
      detail = "retention interval detached at step " + std::to_string(step);
      return false;
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "retention interval overlap margin %.4f",
                min_overlap);
  detail = buf;
  return true;
}

bool check_double_shift_trend(std::string& detail) {
  const ScenarioConfig config = preset_config(Preset::double_shift);
  const ScoreMatrix matrix = run_scenario(config);
  const std::vector<double> means = step_means(matrix, potential, 1);
  // means[0..3] cover steps 1..4; steps 1 and 3 introduce new populations.
  const double spike_floor = std::min(means[0], means[2]);
  const double settle_ceil = std::max(means[1], means[3]);
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "introduction steps >= %.4f, follow-up steps <= %.4f",
                spike_floor, settle_ceil);
  detail = buf;
  return spike_floor > settle_ceil;
}

bool check_pipeline_determinism(std::string& detail) {
  const fs::path dir = work_dir();
  const std::string sim =
      "simulate --scenario single-shift --reps 3 --scale 0.05 --seed 11 ";
  const fs::path m1 = dir / "det_m1.csv";
  const fs::path m2 = dir / "det_m2.csv";
  const fs::path r1 = dir / "det_r1.json";
  const fs::path r2 = dir / "det_r2.json";

  if (run_cli(sim + "--out '" + m1.string() + "'").exit_code != 0 ||
      run_cli("compute --input '" + m1.string() + "' --seed 42 --output '" +
              r1.string() + "'").exit_code != 0 ||
      run_cli(sim + "--out '" + m2.string() + "'").exit_code != 0 ||
      run_cli("compute --input '" + m2.string() + "' --seed 42 --output '" +
              r2.string() + "'").exit_code != 0) {
    detail = "pipeline command failed";
    return false;
  }
  if (slurp(m1) != slurp(m2)) {
    detail = "matrix files differ between runs";
    return false;
  }
  if (slurp(r1) != slurp(r2)) {
    detail = "report files differ between runs";
    return false;
  }
  detail = "matrix and report files byte-identical across two runs";
  return true;
}

bool check_round_trips(std::string& detail) {
  std::mt19937_64 rng(987654321);
  for (int round = 0; round < 500; ++round) {
    const ScoreMatrix matrix = random_matrix(rng);
    for (const MatrixFormat format :
         {MatrixFormat::delimited, MatrixFormat::structured}) {
      const std::string text = write_score_matrix(matrix, format);
      if (!(parse_score_matrix(text, format) == matrix)) {
        detail = "matrix round trip diverged in round " +
                 std::to_string(round);
        return false;
      }
    }
  }
  for (int round = 0; round < 500; ++round) {
    const Report report = random_report(rng);
    const std::string text = write_report(report, ReportFormat::structured);
    if (!(parse_report(text) == report)) {
      detail = "report round trip diverged in round " + std::to_string(round);
      return false;
    }
    if (write_report(parse_report(text), ReportFormat::structured) != text) {
      detail = "report rendering unstable in round " + std::to_string(round);
      return false;
    }
  }
  detail = "500 matrices across both formats, 500 structured reports";
  return true;
}

bool check_cli_names_missing_cells(std::string& detail) {
  const fs::path gap_file = work_dir() / "gaps.csv";
  {
    std::ofstream out(gap_file, std::ios::binary);
    out << "model_step,dataset_step,repetition,score\n"
        << "0,0,0,0.9\n1,1,0,0.8\n2,2,0,0.7\n";
  }
  // Diagonal-only matrix: every off-diagonal cell the measurements need.
  const char* expected[] = {
      "(model_step=0, dataset_step=1)", "(model_step=1, dataset_step=0)",
      "(model_step=1, dataset_step=2)", "(model_step=2, dataset_step=0)",
      "(model_step=2, dataset_step=1)"};

  const RunResult computed =
      run_cli("compute --input '" + gap_file.string() + "'");
  if (computed.exit_code != 1) {
    detail = "compute exit code " + std::to_string(computed.exit_code) +
             "; expected 1";
    return false;
  }
  for (const char* cell : expected)
    if (computed.err.find(cell) == std::string::npos) {
      detail = std::string("compute did not name ") + cell;
      return false;
    }

  const RunResult validated =
      run_cli("validate --input '" + gap_file.string() + "'");
  if (validated.exit_code != 1) {
    detail = "validate exit code " + std::to_string(validated.exit_code) +
             "; expected 1";
    return false;
  }
  for (const char* cell : expected)
    if (validated.out.find(cell) == std::string::npos) {
      detail = std::string("validate did not name ") + cell;
      return false;
    }
  detail = "compute and validate exit 1 naming all 5 absent cells";
  return true;
}

struct Check {
  const char* name;
  bool (*run)(std::string& detail);
};

}  // namespace

int main() {
  const Check checks[] = {
      {"two-step goldens for learning and potential", check_two_step_goldens},
      {"learning minus potential telescopes to the on-version change",
       check_decomposition_identity},
      {"decay weights normalize and bound retention", check_decay_weights},
      {"rank AUROC matches pair counting and ignores monotone transforms",
       check_auroc_oracle},
      {"single shift: learning tracks potential, performance stable",
       check_single_shift_trend},
      {"limited plasticity: learning trails potential, retention steady",
       check_limited_plasticity_trend},
      {"double shift: potential spikes at each introduction",
       check_double_shift_trend},
      {"simulate and compute are byte-deterministic", check_pipeline_determinism},
      {"serialization round trips", check_round_trips},
      {"cli names every missing cell and exits 1",
       check_cli_names_missing_cells},
  };

  int failures = 0;
  int index = 0;
  for (const Check& check : checks) {
    ++index;
    std::string detail;
    bool ok = false;
    try {
      ok = check.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("unexpected exception: ") + e.what();
    }
    if (!ok) ++failures;
    std::printf("criterion %2d: %s  %s%s%s\n", index, ok ? "PASS" : "FAIL",
                check.name, detail.empty() ? "" : "  ",
                detail.c_str());
  }
  if (failures != 0) std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
