#include "score_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "error.hpp"

namespace adaptrace {

const char* measurement_name(Measurement m) {
  switch (m) {
    case Measurement::performance:
      return "performance";
    case Measurement::learning:
      return "learning";
    case Measurement::potential:
      return "potential";
    case Measurement::retention:
      return "retention";
  }
  fail(errc::internal, "unknown measurement");
}

std::string cell_label(const Cell& cell) {
  return "(model_step=" + std::to_string(cell.model_step) +
         ", dataset_step=" + std::to_string(cell.dataset_step) +
         ", repetition=" + std::to_string(cell.repetition) + ")";
}

std::string pair_label(int model_step, int dataset_step) {
  return "(model_step=" + std::to_string(model_step) +
         ", dataset_step=" + std::to_string(dataset_step) + ")";
}

std::string describe_missing(const std::vector<Cell>& cells) {
  std::string out;
  std::size_t i = 0;
  while (i < cells.size()) {
    std::size_t j = i + 1;
    while (j < cells.size() && cells[j].model_step == cells[i].model_step &&
           cells[j].dataset_step == cells[i].dataset_step)
      ++j;
    if (!out.empty()) out += ", ";
    out += pair_label(cells[i].model_step, cells[i].dataset_step);
    out += " [" + std::to_string(j - i) + " repetition" +
           (j - i == 1 ? "" : "s") + "]";
    i = j;
  }
  return out;
}

std::optional<double> ScoreMatrix::find(int model_step, int dataset_step,
                                        int repetition) const {
  const auto it = entries_.find(Cell{model_step, dataset_step, repetition});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

double ScoreMatrix::at(int model_step, int dataset_step,
                       int repetition) const {
  const auto found = find(model_step, dataset_step, repetition);
  if (!found)
    fail(errc::incomplete,
         "matrix has no score for cell " +
             cell_label(Cell{model_step, dataset_step, repetition}));
  return *found;
}

void ScoreMatrix::check_step(int step) const {
  if (step < 0 || step > last_step())
    fail(errc::invalid_argument,
         "step " + std::to_string(step) + " outside matrix range [0, " +
             std::to_string(last_step()) + "]");
}

std::vector<Cell> ScoreMatrix::required_cells(Measurement m, int step) const {
  switch (m) {
    case Measurement::performance:
      return {Cell{step, step, 0}};
    case Measurement::learning:
      return {Cell{step, step, 0}, Cell{step - 1, step, 0}};
    case Measurement::potential:
      return {Cell{step - 1, step - 1, 0}, Cell{step - 1, step, 0}};
    case Measurement::retention: {
      std::vector<Cell> cells;
      cells.reserve(static_cast<std::size_t>(step));
      for (int v = 0; v < step; ++v) cells.push_back(Cell{step, v, 0});
      return cells;
    }
  }
  fail(errc::internal, "unknown measurement");
}

bool ScoreMatrix::supports(Measurement m, int step) const {
  check_step(step);
  if (m != Measurement::performance && step == 0) return false;
  for (const Cell& cell : required_cells(m, step))
    for (int r = 0; r < num_repetitions_; ++r)
      if (!find(cell.model_step, cell.dataset_step, r)) return false;
  return true;
}

std::vector<Cell> ScoreMatrix::missing_cells(Measurement m, int step) const {
  check_step(step);
  if (m != Measurement::performance && step == 0)
    fail(errc::invalid_argument,
         std::string(measurement_name(m)) +
             " is undefined at step 0; there is no earlier version to "
             "compare against");
  std::vector<Cell> missing;
  for (const Cell& cell : required_cells(m, step))
    for (int r = 0; r < num_repetitions_; ++r)
      if (!find(cell.model_step, cell.dataset_step, r))
        missing.push_back(Cell{cell.model_step, cell.dataset_step, r});
  std::sort(missing.begin(), missing.end());
  return missing;
}

ScoreMatrix::Builder& ScoreMatrix::Builder::metric(std::string name,
                                                   MetricRange range) {
  if (name.empty())
    fail(errc::invalid_argument, "metric name must not be empty");
  if (!std::isfinite(range.lo) || !std::isfinite(range.hi) ||
      !(range.lo < range.hi))
    fail(errc::invalid_argument,
         "metric range must be a finite interval with lo < hi");
  metric_name_ = std::move(name);
  metric_range_ = range;
  return *this;
}

ScoreMatrix::Builder& ScoreMatrix::Builder::add(int model_step,
                                                int dataset_step,
                                                int repetition, double score) {
  if (model_step < 0 || dataset_step < 0 || repetition < 0)
    fail(errc::invalid_argument,
         "cell indices must be nonnegative; got " +
             cell_label(Cell{model_step, dataset_step, repetition}));
  if (!std::isfinite(score))
    fail(errc::invalid_argument,
         "score for cell " +
             cell_label(Cell{model_step, dataset_step, repetition}) +
             " is not finite");
  if (!metric_range_.contains(score))
    fail(errc::invalid_argument,
         "score " + std::to_string(score) + " for cell " +
             cell_label(Cell{model_step, dataset_step, repetition}) +
             " lies outside the metric range [" +
             std::to_string(metric_range_.lo) + ", " +
             std::to_string(metric_range_.hi) + "]");
  const Cell cell{model_step, dataset_step, repetition};
  if (entries_.count(cell))
    fail(errc::invalid_argument, "duplicate cell " + cell_label(cell));
  entries_.emplace(cell, score);
  return *this;
}

bool ScoreMatrix::Builder::contains(int model_step, int dataset_step,
                                    int repetition) const {
  return entries_.count(Cell{model_step, dataset_step, repetition}) > 0;
}

ScoreMatrix ScoreMatrix::Builder::build() const {
  if (entries_.empty())
    fail(errc::invalid_argument, "matrix has no scores");
  int max_step = 0;
  int max_rep = 0;
  std::set<int> reps_seen;
  for (const auto& [cell, score] : entries_) {
    max_step = std::max({max_step, cell.model_step, cell.dataset_step});
    max_rep = std::max(max_rep, cell.repetition);
    reps_seen.insert(cell.repetition);
  }
  for (int r = 0; r <= max_rep; ++r)
    if (!reps_seen.count(r))
      fail(errc::invalid_argument,
           "repetition indices are not contiguous: repetition " +
               std::to_string(r) + " never appears but repetition " +
               std::to_string(max_rep) + " does");

  ScoreMatrix matrix;
  matrix.entries_ = entries_;
  matrix.metric_name_ = metric_name_;
  matrix.metric_range_ = metric_range_;
  matrix.num_steps_ = max_step + 1;
  matrix.num_repetitions_ = max_rep + 1;
  return matrix;
}

}  // namespace adaptrace
