#include "io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "error.hpp"
#include "version.hpp"

namespace adaptrace {

namespace {

using nlohmann::json;

constexpr const char* kMatrixHeader = "model_step,dataset_step,repetition,score";
constexpr const char* kMatrixFormatTag = "adaptrace-matrix";
constexpr const char* kReportFormatTag = "adaptrace-report";
constexpr int kFormatVersion = 1;

// Shortest decimal form that parses back to the same double.
std::string format_double(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail_line(std::size_t line, const std::string& message) {
  fail(errc::parse, "line " + std::to_string(line) + ": " + message);
}

int parse_index_field(std::string_view field, const char* name,
                      std::size_t line) {
  field = trim(field);
  long long value = 0;
  const auto result =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (result.ec != std::errc{} || result.ptr != field.data() + field.size() ||
      value < 0 || value > std::numeric_limits<int>::max())
    fail_line(line, std::string("field '") + name +
                        "' is not a nonnegative integer: '" +
                        std::string(field) + "'");
  return static_cast<int>(value);
}

double parse_score_field(std::string_view field, std::size_t line) {
  field = trim(field);
  double value = 0.0;
  const auto result =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (result.ec != std::errc{} || result.ptr != field.data() + field.size())
    fail_line(line,
              "field 'score' is not a number: '" + std::string(field) + "'");
  if (!std::isfinite(value))
    fail_line(line, "field 'score' must be finite");
  return value;
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

ScoreMatrix parse_delimited_matrix(std::string_view bytes) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) eol = bytes.size();
    lines.push_back(bytes.substr(pos, eol - pos));
    pos = eol + 1;
  }

  bool saw_header = false;
  ScoreMatrix::Builder builder;
  builder.metric("auroc", MetricRange{0.0, 1.0});
  std::map<Cell, std::size_t> first_seen;

  for (std::size_t line_number = 1; line_number <= lines.size();
       ++line_number) {
    std::string_view line = lines[line_number - 1];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;

    if (!saw_header) {
      if (trim(line) != kMatrixHeader)
        fail_line(line_number, std::string("expected header '") +
                                   kMatrixHeader + "'");
      saw_header = true;
      continue;
    }

    const std::vector<std::string_view> fields = split_line(line);
    if (fields.size() != 4)
      fail_line(line_number, "expected 4 comma-separated fields, got " +
                                 std::to_string(fields.size()));
    const Cell cell{parse_index_field(fields[0], "model_step", line_number),
                    parse_index_field(fields[1], "dataset_step", line_number),
                    parse_index_field(fields[2], "repetition", line_number)};
    const double score = parse_score_field(fields[3], line_number);

    const auto [it, inserted] = first_seen.emplace(cell, line_number);
    if (!inserted)
      fail_line(line_number,
                "duplicate cell " + cell_label(cell) + "; first seen at line " +
                    std::to_string(it->second));
    if (score < 0.0 || score > 1.0)
      fail_line(line_number, "score " + format_double(score) +
                                 " outside the metric range [0, 1]");
    builder.add(cell.model_step, cell.dataset_step, cell.repetition, score);
  }

  if (!saw_header)
    fail(errc::parse, std::string("line 0: input is empty; expected header '") +
                          kMatrixHeader + "'");
  try {
    return builder.build();
  } catch (const Error& e) {
    fail(errc::parse, e.what());
  }
}

std::string write_delimited_matrix(const ScoreMatrix& matrix) {
  std::string out = kMatrixHeader;
  out += '\n';
  for (const auto& [cell, score] : matrix.entries()) {
    out += std::to_string(cell.model_step);
    out += ',';
    out += std::to_string(cell.dataset_step);
    out += ',';
    out += std::to_string(cell.repetition);
    out += ',';
    out += format_double(score);
    out += '\n';
  }
  return out;
}

[[noreturn]] void fail_structured(const std::string& what,
                                  const std::string& message) {
  fail(errc::parse, what + ": " + message);
}

json parse_json_or_fail(std::string_view bytes, const std::string& what) {
  try {
    return json::parse(bytes);
  } catch (const json::parse_error& e) {
    fail_structured(what, std::string("malformed JSON (") + e.what() + ")");
  }
}

void require_tag(const json& j, const char* tag, const std::string& what) {
  if (!j.is_object()) fail_structured(what, "top level must be an object");
  if (!j.contains("format") || !j["format"].is_string() ||
      j["format"].get<std::string>() != tag)
    fail_structured(what, std::string("missing or unexpected format tag; "
                                      "expected \"") +
                              tag + "\"");
  if (!j.contains("version") || !j["version"].is_number_integer() ||
      j["version"].get<int>() != kFormatVersion)
    fail_structured(what, "unsupported format version");
}

double require_number(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key) || !j[key].is_number())
    fail_structured(what, std::string("missing numeric field \"") + key + "\"");
  return j[key].get<double>();
}

int require_int(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key) || !j[key].is_number_integer())
    fail_structured(what, std::string("missing integer field \"") + key + "\"");
  return j[key].get<int>();
}

std::string require_string(const json& j, const char* key,
                           const std::string& what) {
  if (!j.contains(key) || !j[key].is_string())
    fail_structured(what, std::string("missing string field \"") + key + "\"");
  return j[key].get<std::string>();
}

MetricRange require_range(const json& j, const std::string& what) {
  if (!j.contains("metric_range") || !j["metric_range"].is_array() ||
      j["metric_range"].size() != 2 || !j["metric_range"][0].is_number() ||
      !j["metric_range"][1].is_number())
    fail_structured(what, "\"metric_range\" must be an array of two numbers");
  return MetricRange{j["metric_range"][0].get<double>(),
                     j["metric_range"][1].get<double>()};
}

ScoreMatrix parse_structured_matrix(std::string_view bytes) {
  const std::string what = "structured matrix";
  const json j = parse_json_or_fail(bytes, what);
  require_tag(j, kMatrixFormatTag, what);

  ScoreMatrix::Builder builder;
  try {
    builder.metric(require_string(j, "metric", what), require_range(j, what));
  } catch (const Error& e) {
    if (e.code() == errc::parse) throw;
    fail_structured(what, e.what());
  }

  if (!j.contains("entries") || !j["entries"].is_array())
    fail_structured(what, "missing array field \"entries\"");
  std::map<Cell, std::size_t> first_seen;
  std::size_t index = 0;
  for (const json& entry : j["entries"]) {
    const std::string where = "entry " + std::to_string(index);
    if (!entry.is_array() || entry.size() != 4)
      fail_structured(what, where + " must be [model_step, dataset_step, "
                                    "repetition, score]");
    for (int k = 0; k < 3; ++k)
      if (!entry[static_cast<std::size_t>(k)].is_number_integer())
        fail_structured(what, where + " has a non-integer index");
    if (!entry[3].is_number())
      fail_structured(what, where + " has a non-numeric score");
    const Cell cell{entry[0].get<int>(), entry[1].get<int>(),
                    entry[2].get<int>()};
    const auto [it, inserted] = first_seen.emplace(cell, index);
    if (!inserted)
      fail_structured(what, where + " duplicates cell " + cell_label(cell) +
                                " first seen at entry " +
                                std::to_string(it->second));
    try {
      builder.add(cell.model_step, cell.dataset_step, cell.repetition,
                  entry[3].get<double>());
    } catch (const Error& e) {
      fail_structured(what, where + ": " + e.what());
    }
    ++index;
  }
  try {
    return builder.build();
  } catch (const Error& e) {
    fail_structured(what, e.what());
  }
}

std::string write_structured_matrix(const ScoreMatrix& matrix) {
  json j;
  j["format"] = kMatrixFormatTag;
  j["version"] = kFormatVersion;
  j["metric"] = matrix.metric_name();
  j["metric_range"] = {matrix.metric_range().lo, matrix.metric_range().hi};
  json entries = json::array();
  for (const auto& [cell, score] : matrix.entries())
    entries.push_back(
        {cell.model_step, cell.dataset_step, cell.repetition, score});
  j["entries"] = std::move(entries);
  return j.dump(2) + "\n";
}

json interval_to_json(const IntervalEstimate& est) {
  return json{{"mean", est.mean}, {"lo", est.ci_low}, {"hi", est.ci_high}};
}

IntervalEstimate interval_from_json(const json& j, double confidence, int n,
                                    const std::string& what) {
  if (!j.is_object())
    fail_structured(what, "interval must be an object with mean/lo/hi");
  IntervalEstimate est;
  est.mean = require_number(j, "mean", what);
  est.ci_low = require_number(j, "lo", what);
  est.ci_high = require_number(j, "hi", what);
  est.confidence = confidence;
  est.n = n;
  est.degenerate = n == 1;
  if (!(est.ci_low <= est.mean && est.mean <= est.ci_high))
    fail_structured(what, "interval violates lo <= mean <= hi");
  return est;
}

std::string write_structured_report(const Report& report) {
  json j;
  j["format"] = kReportFormatTag;
  j["version"] = kFormatVersion;
  j["metric"] = report.series.metric_name;
  j["metric_range"] = {report.series.metric_range.lo,
                       report.series.metric_range.hi};
  j["lambda"] = report.series.lambda;
  j["confidence"] = report.series.confidence;
  j["repetitions"] = report.series.num_repetitions;
  j["ci"] = json{{"method", ci_method_name(report.ci.method)},
                 {"bootstrap_samples", report.ci.bootstrap_samples},
                 {"seed", report.ci.seed}};
  j["thresholds"] =
      json{{"potential_fraction", report.thresholds.potential_fraction},
           {"retention_drop_fraction",
            report.thresholds.retention_drop_fraction}};

  json steps = json::array();
  for (const MeasurementPoint& point : report.series.points) {
    json p;
    p["step"] = point.step;
    p["performance"] = interval_to_json(point.performance);
    if (point.learning) p["learning"] = interval_to_json(*point.learning);
    if (point.potential) p["potential"] = interval_to_json(*point.potential);
    if (point.retention) p["retention"] = interval_to_json(*point.retention);
    steps.push_back(std::move(p));
  }
  j["steps"] = std::move(steps);

  json warnings = json::array();
  for (const SeriesWarning& w : report.series.warnings)
    warnings.push_back(json{{"step", w.step}, {"message", w.message}});
  j["warnings"] = std::move(warnings);

  json notes = json::array();
  for (const Note& note : report.notes)
    notes.push_back(json{
        {"step", note.step}, {"rule", note.rule}, {"message", note.message}});
  j["notes"] = std::move(notes);

  j["provenance"] = json{{"input_digest", report.provenance.input_digest},
                         {"tool_version", report.provenance.tool_version}};
  return j.dump(2) + "\n";
}

std::string write_delimited_report(const Report& report) {
  static const char* const kMeasurements[] = {"performance", "learning",
                                              "potential", "retention"};
  std::string out = "step";
  for (const char* name : kMeasurements) {
    out += std::string(",") + name + "_mean";
    out += std::string(",") + name + "_ci_low";
    out += std::string(",") + name + "_ci_high";
  }
  out += '\n';
  for (const MeasurementPoint& point : report.series.points) {
    out += std::to_string(point.step);
    const std::optional<IntervalEstimate> cells[] = {
        point.performance, point.learning, point.potential, point.retention};
    for (const auto& cell : cells) {
      if (cell) {
        out += ',' + format_double(cell->mean);
        out += ',' + format_double(cell->ci_low);
        out += ',' + format_double(cell->ci_high);
      } else {
        out += ",,,";
      }
    }
    out += '\n';
  }
  return out;
}

std::string write_plot_series(const Report& report) {
  std::string out = "step,series_name,mean,ci_low,ci_high\n";
  for (const MeasurementPoint& point : report.series.points) {
    const std::pair<const char*, std::optional<IntervalEstimate>> rows[] = {
        {"performance", point.performance},
        {"learning", point.learning},
        {"potential", point.potential},
        {"retention", point.retention},
    };
    for (const auto& [name, est] : rows) {
      if (!est) continue;
      out += std::to_string(point.step);
      out += ',';
      out += name;
      out += ',' + format_double(est->mean);
      out += ',' + format_double(est->ci_low);
      out += ',' + format_double(est->ci_high);
      out += '\n';
    }
  }
  return out;
}

}  // namespace

const char* matrix_format_name(MatrixFormat format) {
  switch (format) {
    case MatrixFormat::delimited:
      return "delimited";
    case MatrixFormat::structured:
      return "structured";
  }
  fail(errc::internal, "unknown matrix format");
}

const char* report_format_name(ReportFormat format) {
  switch (format) {
    case ReportFormat::structured:
      return "structured";
    case ReportFormat::delimited:
      return "delimited";
    case ReportFormat::plot_series:
      return "plot-series";
  }
  fail(errc::internal, "unknown report format");
}

MatrixFormat matrix_format_from_name(const std::string& name) {
  if (name == "delimited") return MatrixFormat::delimited;
  if (name == "structured") return MatrixFormat::structured;
  fail(errc::invalid_argument,
       "unknown matrix format '" + name +
           "' (expected 'delimited' or 'structured')");
}

ReportFormat report_format_from_name(const std::string& name) {
  // Underscores are accepted as separators too.
  std::string normalized = name;
  std::replace(normalized.begin(), normalized.end(), '_', '-');
  if (normalized == "structured") return ReportFormat::structured;
  if (normalized == "delimited") return ReportFormat::delimited;
  if (normalized == "plot-series") return ReportFormat::plot_series;
  fail(errc::invalid_argument,
       "unknown report format '" + name +
           "' (expected 'structured', 'delimited' or 'plot-series')");
}

MatrixFormat detect_matrix_format(std::string_view bytes) {
  for (char c : bytes) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
    return c == '{' ? MatrixFormat::structured : MatrixFormat::delimited;
  }
  return MatrixFormat::delimited;
}

ScoreMatrix parse_score_matrix(std::string_view bytes, MatrixFormat format) {
  switch (format) {
    case MatrixFormat::delimited:
      return parse_delimited_matrix(bytes);
    case MatrixFormat::structured:
      return parse_structured_matrix(bytes);
  }
  fail(errc::internal, "unknown matrix format");
}

std::string write_score_matrix(const ScoreMatrix& matrix,
                               MatrixFormat format) {
  switch (format) {
    case MatrixFormat::delimited:
      return write_delimited_matrix(matrix);
    case MatrixFormat::structured:
      return write_structured_matrix(matrix);
  }
  fail(errc::internal, "unknown matrix format");
}

std::vector<Note> interpret(const MeasurementSeries& series,
                            const InterpretThresholds& thresholds) {
  if (!(thresholds.potential_fraction >= 0.0) ||
      !(thresholds.retention_drop_fraction >= 0.0))
    fail(errc::invalid_argument, "thresholds must be nonnegative");
  std::vector<Note> notes;
  const double width = series.metric_range.width();
  for (std::size_t i = 1; i < series.points.size(); ++i) {
    const MeasurementPoint& point = series.points[i];
    const MeasurementPoint& previous = series.points[i - 1];
    if (point.learning && point.learning->mean < 0.0 &&
        point.performance.mean > previous.performance.mean)
      notes.push_back(Note{point.step, "negative-learning",
                           "learning is negative while performance improved; "
                           "examine the new dataset"});
    if (point.potential &&
        point.potential->mean > thresholds.potential_fraction * width)
      notes.push_back(Note{point.step, "high-potential",
                           "potential is high; a population shift may be "
                           "under way"});
    if (point.retention &&
        point.retention->mean < previous.performance.mean -
                                    thresholds.retention_drop_fraction * width)
      notes.push_back(Note{point.step, "low-retention",
                           "retention fell well below the previous step's "
                           "performance; earlier knowledge may be getting "
                           "lost"});
  }
  return notes;
}

Report make_report(const ScoreMatrix& matrix, double lambda, double confidence,
                   const CiOptions& ci, const InterpretThresholds& thresholds) {
  Report report;
  report.series = measurement_series(matrix, lambda, confidence, ci);
  report.ci = ci;
  report.thresholds = thresholds;
  report.notes = interpret(report.series, thresholds);
  report.provenance.input_digest =
      digest_bytes(write_score_matrix(matrix, MatrixFormat::delimited));
  report.provenance.tool_version = kVersion;
  return report;
}

std::string write_report(const Report& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::structured:
      return write_structured_report(report);
    case ReportFormat::delimited:
      return write_delimited_report(report);
    case ReportFormat::plot_series:
      return write_plot_series(report);
  }
  fail(errc::internal, "unknown report format");
}

Report parse_report(std::string_view bytes) {
  const std::string what = "structured report";
  const json j = parse_json_or_fail(bytes, what);
  require_tag(j, kReportFormatTag, what);

  Report report;
  report.series.metric_name = require_string(j, "metric", what);
  report.series.metric_range = require_range(j, what);
  report.series.lambda = require_number(j, "lambda", what);
  report.series.confidence = require_number(j, "confidence", what);
  report.series.num_repetitions = require_int(j, "repetitions", what);
  if (report.series.num_repetitions < 1)
    fail_structured(what, "\"repetitions\" must be positive");
  if (!(report.series.confidence > 0.0 && report.series.confidence < 1.0))
    fail_structured(what, "\"confidence\" must lie strictly between 0 and 1");

  if (!j.contains("ci") || !j["ci"].is_object())
    fail_structured(what, "missing object field \"ci\"");
  const json& ci = j["ci"];
  try {
    report.ci.method = ci_method_from_name(require_string(ci, "method", what));
  } catch (const Error& e) {
    if (e.code() == errc::parse) throw;
    fail_structured(what, e.what());
  }
  report.ci.bootstrap_samples = require_int(ci, "bootstrap_samples", what);
  if (!ci.contains("seed") || !ci["seed"].is_number_integer())
    fail_structured(what, "missing integer field \"seed\"");
  report.ci.seed = ci["seed"].get<std::uint64_t>();

  if (!j.contains("thresholds") || !j["thresholds"].is_object())
    fail_structured(what, "missing object field \"thresholds\"");
  report.thresholds.potential_fraction =
      require_number(j["thresholds"], "potential_fraction", what);
  report.thresholds.retention_drop_fraction =
      require_number(j["thresholds"], "retention_drop_fraction", what);

  if (!j.contains("steps") || !j["steps"].is_array() || j["steps"].empty())
    fail_structured(what, "missing nonempty array field \"steps\"");
  int expected_step = 0;
  for (const json& p : j["steps"]) {
    MeasurementPoint point;
    point.step = require_int(p, "step", what);
    if (point.step != expected_step)
      fail_structured(what, "steps must be contiguous from 0");
    ++expected_step;
    if (!p.contains("performance"))
      fail_structured(what, "step " + std::to_string(point.step) +
                                " is missing \"performance\"");
    point.performance =
        interval_from_json(p["performance"], report.series.confidence,
                           report.series.num_repetitions, what);
    for (const char* name : {"learning", "potential", "retention"}) {
      if (!p.contains(name)) continue;
      if (point.step == 0)
        fail_structured(what, std::string("step 0 cannot carry \"") + name +
                                  "\"");
      const IntervalEstimate est =
          interval_from_json(p[name], report.series.confidence,
                             report.series.num_repetitions, what);
      if (std::string_view(name) == "learning") point.learning = est;
      if (std::string_view(name) == "potential") point.potential = est;
      if (std::string_view(name) == "retention") point.retention = est;
    }
    report.series.points.push_back(std::move(point));
  }

  if (j.contains("warnings")) {
    if (!j["warnings"].is_array())
      fail_structured(what, "\"warnings\" must be an array");
    for (const json& w : j["warnings"])
      report.series.warnings.push_back(SeriesWarning{
          require_int(w, "step", what), require_string(w, "message", what)});
  }
  if (j.contains("notes")) {
    if (!j["notes"].is_array())
      fail_structured(what, "\"notes\" must be an array");
    for (const json& n : j["notes"])
      report.notes.push_back(Note{require_int(n, "step", what),
                                  require_string(n, "rule", what),
                                  require_string(n, "message", what)});
  }

  if (!j.contains("provenance") || !j["provenance"].is_object())
    fail_structured(what, "missing object field \"provenance\"");
  report.provenance.input_digest =
      require_string(j["provenance"], "input_digest", what);
  report.provenance.tool_version =
      require_string(j["provenance"], "tool_version", what);
  return report;
}

std::string digest_bytes(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash));
  return std::string("fnv1a64:") + buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io, "cannot read file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) fail(errc::io, "cannot read file '" + path + "'");
  return std::move(buffer).str();
}

void write_file(const std::string& path, std::string_view content) {
  // Two-phase write: readers never observe partial content, and a failed
  // write leaves any existing file untouched.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(errc::io, "cannot write file '" + path + "'");
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      fail(errc::io, "cannot write file '" + path + "'");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    fail(errc::io, "cannot write file '" + path + "'");
  }
}

}  // namespace adaptrace
