#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "score_matrix.hpp"

namespace adaptrace {

/// Multivariate Gaussian given by a mean vector and a full covariance matrix
/// (row-major, dim x dim). The covariance must be symmetric positive
/// definite; this is checked when the distribution is prepared for sampling.
struct GaussianSpec {
  std::vector<double> mean;
  std::vector<double> covariance;
};

/// One source population: a pair of class-conditional Gaussians sharing a
/// feature space. Samples labeled 1 come from `positive`, labels 0 from
/// `negative`.
struct Population {
  std::string id;
  GaussianSpec positive;
  GaussianSpec negative;
};

struct MixtureComponent {
  std::string population_id;
  double fraction = 0.0;
};

/// Population mix of one dataset version. Fractions must be in [0, 1] and
/// sum to 1.
using Mixture = std::vector<MixtureComponent>;

enum class Plasticity {
  full,     // every parameter trains at every step
  limited,  // after step 0, feature weights freeze; only the output scale
            // and bias continue to train
};

/// Per-class sample counts of the train/validation/test splits.
struct PartitionSizes {
  int train = 105;
  int validation = 15;
  int test = 30;
};

struct TrainingOptions {
  double learning_rate = 0.5;
  int epochs = 120;
};

/// Full description of a synthetic study: which populations exist, how their
/// mix changes across dataset versions, and how the model is carried along.
struct ScenarioConfig {
  std::vector<Population> populations;
  std::vector<Mixture> schedule;  // one mixture per step; length >= 2
  Plasticity plasticity = Plasticity::full;
  PartitionSizes partition_sizes{};
  int num_repetitions = 25;
  std::uint64_t base_seed = 42;
  TrainingOptions training{};
  // When false, every step's model is retrained from a fresh initialization
  // instead of continuing from the previous step's parameters.
  bool warm_start = true;
  // When true, samples from populations still present in the next step's mix
  // are carried over and only the shortfall is drawn fresh, modeling a study
  // whose cohort changes gradually rather than being resampled.
  bool reuse_samples = true;
};

/// Fails unless the configuration is coherent: known and unique population
/// ids, consistent dimensions, valid mixtures, at least two steps, positive
/// partition sizes, repetitions and learning rate, nonnegative epochs, and
/// symmetric positive definite covariances.
void validate_config(const ScenarioConfig& config);

/// Labeled feature rows. Features are row-major, size() x dim.
struct Dataset {
  std::size_t dim = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features.data() + i * dim, dim);
  }
};

/// Exact integer split of `total` samples across mixture components:
/// each component gets the floor of its quota, and the remainders are
/// assigned in order of largest fractional part, earlier components winning
/// ties. The counts always sum to `total`.
std::vector<int> allocate_counts(const Mixture& mixture, int total);

/// Draws a class-balanced dataset (`per_class` samples each of labels 1 and
/// 0) from the mixture over `populations`. Sampling is deterministic in
/// `seed`. Rows are grouped by mixture component, positives first.
Dataset sample_dataset(const std::vector<Population>& populations,
                       const Mixture& mixture, int per_class,
                       std::uint64_t seed);

/// Linear scorer: score(x) = output_scale * dot(weights, x) + bias.
/// `frozen_weights` (when nonempty) marks weights excluded from training;
/// `train_scale` additionally enables training of output_scale, which is
/// how limited plasticity keeps any capacity at all once weights freeze.
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  double output_scale = 1.0;
  std::vector<char> frozen_weights;
  bool train_scale = false;

  double raw_score(std::span<const double> x) const;
};

/// Mean logistic loss of the model on a dataset.
double logistic_loss(const LinearModel& model, const Dataset& data);

/// Full-batch gradient descent on the logistic loss for `options.epochs`
/// epochs, returning the parameters of the epoch with the lowest validation
/// loss. Frozen weights never move; bias always trains; output_scale trains
/// only when the model asks for it. Zero epochs returns the model unchanged.
/// Fails if either split is empty, not class-balanced, of the wrong
/// dimension, or if the loss turns non-finite.
LinearModel train_step(const LinearModel& model, const Dataset& train,
                       const Dataset& validation,
                       const TrainingOptions& options);

/// Scores of one repetition, keyed by (model_step, dataset_step). Contains
/// every pair needed by the measurements: the lower triangle (each model on
/// its own and all earlier datasets) plus each previous model on the next
/// step's dataset.
std::map<std::pair<int, int>, double> run_repetition(
    const ScenarioConfig& config, int repetition);

/// Runs every repetition and assembles the cross-evaluation matrix.
ScoreMatrix run_scenario(const ScenarioConfig& config);

/// Built-in study designs over a 10-dimensional feature space.
enum class Preset {
  single_shift,          // one population gradually replaced by another
  single_shift_limited,  // same shift, limited-plasticity model updates
  double_shift,          // two consecutive shifts across three populations
};

const char* preset_name(Preset preset);
std::optional<Preset> preset_from_name(std::string_view name);
std::vector<Preset> all_presets();

/// Configuration for a preset. `partition_scale` multiplies the full-study
/// split sizes (525/75/150 per class); the default 0.2 gives 105/15/30.
ScenarioConfig preset_config(Preset preset, double partition_scale = 0.2);

/// Single-shift study whose incoming population has its own class
/// separation. Above the resident separation (2.6) the new population is
/// intrinsically easier, so potential at its introduction can go negative;
/// below, it is harder and potential is strongly positive. The named presets
/// keep the separations equal and distinguish populations by feature
/// direction only.
ScenarioConfig single_shift_with_separation(double incoming_separation,
                                            double partition_scale = 0.2);

/// The split sizes a given scale produces (each at least 1).
PartitionSizes scaled_partition_sizes(double partition_scale);

}  // namespace adaptrace
