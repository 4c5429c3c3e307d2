#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "measurements.hpp"
#include "score_matrix.hpp"

namespace adaptrace {

enum class MatrixFormat { delimited, structured };
enum class ReportFormat { structured, delimited, plot_series };

const char* matrix_format_name(MatrixFormat format);
const char* report_format_name(ReportFormat format);
MatrixFormat matrix_format_from_name(const std::string& name);
ReportFormat report_format_from_name(const std::string& name);

/// Sniffs the serialization of a matrix file: structured when the first
/// non-whitespace byte opens an object, delimited otherwise.
MatrixFormat detect_matrix_format(std::string_view bytes);

/// Parses a score matrix. Errors carry the line (delimited) or entry index
/// (structured) and the reason, and duplicate cells name both occurrences.
ScoreMatrix parse_score_matrix(std::string_view bytes, MatrixFormat format);

/// Serializes a matrix. Output is canonical: entries are sorted, numbers use
/// the shortest representation that parses back to the same value, so
/// parse(write(m)) == m and write(parse(b)) is stable.
std::string write_score_matrix(const ScoreMatrix& matrix, MatrixFormat format);

/// Thresholds of the reading rules, as fractions of the metric range width.
struct InterpretThresholds {
  double potential_fraction = 0.05;
  double retention_drop_fraction = 0.05;

  bool operator==(const InterpretThresholds&) const = default;
};

/// One triggered reading rule.
struct Note {
  int step = 0;
  std::string rule;
  std::string message;

  bool operator==(const Note&) const = default;
};

/// Applies the reading rules to a series:
///  - "negative-learning": learning is negative while performance rose;
///    the new dataset deserves a close look.
///  - "high-potential": potential exceeds its threshold; a population
///    shift may be under way.
///  - "low-retention": retention fell more than its threshold below the
///    previous step's performance; earlier knowledge may be getting lost.
std::vector<Note> interpret(const MeasurementSeries& series,
                            const InterpretThresholds& thresholds = {});

struct Provenance {
  std::string input_digest;  // digest of the matrix in canonical delimited form
  std::string tool_version;

  bool operator==(const Provenance&) const = default;
};

/// A measurement series plus everything needed to audit it: the interval
/// options used, the rule thresholds, triggered notes, and provenance.
struct Report {
  MeasurementSeries series;
  CiOptions ci{};
  InterpretThresholds thresholds{};
  std::vector<Note> notes;
  Provenance provenance{};

  bool operator==(const Report&) const = default;
};

/// Computes the full report for a matrix.
Report make_report(const ScoreMatrix& matrix, double lambda, double confidence,
                   const CiOptions& ci = {},
                   const InterpretThresholds& thresholds = {});

/// Serializes a report. The structured format round-trips through
/// parse_report; delimited (one wide row per step) and plot_series (one row
/// per step and measurement, ready for plotting) are export-only.
std::string write_report(const Report& report, ReportFormat format);

/// Parses a report previously written in the structured format.
Report parse_report(std::string_view bytes);

/// FNV-1a 64-bit digest, prefixed with the algorithm name.
std::string digest_bytes(std::string_view bytes);

/// Reads a whole file or fails with errc::io naming the path.
std::string read_file(const std::string& path);

/// Writes a file in one shot (no partial content on failure paths that
/// happen before the write) or fails with errc::io naming the path.
void write_file(const std::string& path, std::string_view content);

}  // namespace adaptrace
