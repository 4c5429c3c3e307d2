#include "simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iterator>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "error.hpp"
#include "metrics.hpp"
#include "rng.hpp"

namespace adaptrace {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct PreparedGaussian {
  std::vector<double> mean;
  std::vector<double> chol;  // lower-triangular factor, row-major dim x dim
};

struct PreparedPopulation {
  PreparedGaussian positive;
  PreparedGaussian negative;
};

// Lower-triangular Cholesky factor. Doubles as the positive-definiteness
// check: a nonpositive pivot means the matrix is not a covariance.
std::vector<double> cholesky(const std::vector<double>& cov, std::size_t dim,
                             const std::string& what) {
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i + 1; j < dim; ++j) {
      const double a = cov[i * dim + j];
      const double b = cov[j * dim + i];
      const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
      if (std::fabs(a - b) > 1e-9 * scale)
        fail(errc::invalid_argument, what + " covariance is not symmetric");
    }
  std::vector<double> chol(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      long double acc = cov[i * dim + j];
      for (std::size_t k = 0; k < j; ++k)
        acc -= static_cast<long double>(chol[i * dim + k]) *
               static_cast<long double>(chol[j * dim + k]);
      if (i == j) {
        if (!(acc > 0.0L))
          fail(errc::invalid_argument,
               what + " covariance is not positive definite");
        chol[i * dim + i] = std::sqrt(static_cast<double>(acc));
      } else {
        chol[i * dim + j] =
            static_cast<double>(acc) / chol[j * dim + j];
      }
    }
  }
  return chol;
}

PreparedGaussian prepare_gaussian(const GaussianSpec& spec, std::size_t dim,
                                  const std::string& what) {
  if (spec.mean.size() != dim)
    fail(errc::invalid_argument,
         what + " mean has dimension " + std::to_string(spec.mean.size()) +
             "; expected " + std::to_string(dim));
  if (spec.covariance.size() != dim * dim)
    fail(errc::invalid_argument,
         what + " covariance must be " + std::to_string(dim) + "x" +
             std::to_string(dim));
  for (double v : spec.mean)
    if (!std::isfinite(v))
      fail(errc::invalid_argument, what + " mean has a non-finite entry");
  for (double v : spec.covariance)
    if (!std::isfinite(v))
      fail(errc::invalid_argument,
           what + " covariance has a non-finite entry");
  return PreparedGaussian{spec.mean, cholesky(spec.covariance, dim, what)};
}

std::vector<double> draw_row(const PreparedGaussian& gaussian,
                             RandomSource& rng) {
  const std::size_t dim = gaussian.mean.size();
  std::vector<double> z(dim);
  for (double& v : z) v = rng.normal();
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    double value = gaussian.mean[i];
    for (std::size_t j = 0; j <= i; ++j)
      value += gaussian.chol[i * dim + j] * z[j];
    x[i] = value;
  }
  return x;
}

using Rows = std::vector<std::vector<double>>;
// Carry-over rows per population id, indexed by class label.
using SamplePool = std::unordered_map<std::string, std::array<Rows, 2>>;

// Builds one class-balanced dataset for a mixture. When `pool` is given,
// rows from populations still in the mix are reused first and only the
// shortfall is drawn fresh; the pool is replaced by the rows this dataset
// actually used, so departures from the mix drop out naturally.
Dataset assemble_dataset(
    const std::unordered_map<std::string, PreparedPopulation>& prepared,
    const Mixture& mixture, int per_class, RandomSource& rng,
    SamplePool* pool) {
  const std::vector<int> counts = allocate_counts(mixture, per_class);
  Dataset dataset;
  dataset.dim = prepared.begin()->second.positive.mean.size();
  dataset.features.reserve(2 * static_cast<std::size_t>(per_class) *
                           dataset.dim);
  dataset.labels.reserve(2 * static_cast<std::size_t>(per_class));

  SamplePool next_pool;
  for (const int cls : {1, 0}) {
    for (std::size_t i = 0; i < mixture.size(); ++i) {
      const std::string& id = mixture[i].population_id;
      const PreparedPopulation& pop = prepared.at(id);
      const PreparedGaussian& gaussian =
          cls == 1 ? pop.positive : pop.negative;
      const auto count = static_cast<std::size_t>(counts[i]);

      Rows used;
      used.reserve(count);
      if (pool) {
        Rows& available = (*pool)[id][static_cast<std::size_t>(cls)];
        const std::size_t carried = std::min(count, available.size());
        used.assign(std::make_move_iterator(available.begin()),
                    std::make_move_iterator(available.begin() +
                                            static_cast<std::ptrdiff_t>(
                                                carried)));
      }
      while (used.size() < count) used.push_back(draw_row(gaussian, rng));

      for (const std::vector<double>& row : used) {
        dataset.features.insert(dataset.features.end(), row.begin(),
                                row.end());
        dataset.labels.push_back(cls);
      }
      if (pool) next_pool[id][static_cast<std::size_t>(cls)] = std::move(used);
    }
  }
  if (pool) *pool = std::move(next_pool);
  return dataset;
}

double stable_sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

void check_split(const Dataset& data, std::size_t dim, const char* name) {
  if (data.size() == 0)
    fail(errc::invalid_argument,
         std::string(name) + " split must not be empty");
  if (data.dim != dim)
    fail(errc::invalid_argument,
         std::string(name) + " split has dimension " +
             std::to_string(data.dim) + "; the model expects " +
             std::to_string(dim));
  if (data.features.size() != data.size() * data.dim)
    fail(errc::invalid_argument,
         std::string(name) + " split has a malformed feature buffer");
  std::size_t positives = 0;
  for (int label : data.labels) {
    if (label != 0 && label != 1)
      fail(errc::invalid_argument,
           std::string(name) + " split has a label outside {0, 1}");
    positives += static_cast<std::size_t>(label);
  }
  if (2 * positives != data.size())
    fail(errc::invalid_argument,
         std::string(name) + " split must be class-balanced; got " +
             std::to_string(positives) + " positive of " +
             std::to_string(data.size()) + " samples");
}

double evaluate_model(const LinearModel& model, const Dataset& test) {
  std::vector<double> scores(test.size());
  for (std::size_t i = 0; i < test.size(); ++i)
    scores[i] = model.raw_score(test.row(i));
  return auroc(test.labels, scores);
}

void check_mixture(const Mixture& mixture,
                   const std::unordered_set<std::string>* known_ids,
                   const std::string& where) {
  if (mixture.empty())
    fail(errc::invalid_argument, where + " has no components");
  std::unordered_set<std::string> seen;
  long double total = 0.0L;
  for (const MixtureComponent& component : mixture) {
    if (known_ids && !known_ids->count(component.population_id))
      fail(errc::invalid_argument,
           where + " references unknown population '" +
               component.population_id + "'");
    if (!seen.insert(component.population_id).second)
      fail(errc::invalid_argument,
           where + " lists population '" + component.population_id +
               "' more than once");
    if (!std::isfinite(component.fraction) || component.fraction < 0.0 ||
        component.fraction > 1.0)
      fail(errc::invalid_argument,
           where + " has a fraction outside [0, 1] for population '" +
               component.population_id + "'");
    total += component.fraction;
  }
  if (std::fabs(static_cast<double>(total) - 1.0) > 1e-9)
    fail(errc::invalid_argument, where + " fractions must sum to 1");
}

}  // namespace

void validate_config(const ScenarioConfig& config) {
  if (config.populations.empty())
    fail(errc::invalid_argument, "scenario needs at least one population");
  const std::size_t dim = config.populations.front().positive.mean.size();
  if (dim == 0)
    fail(errc::invalid_argument, "feature dimension must be positive");

  std::unordered_set<std::string> ids;
  for (const Population& pop : config.populations) {
    if (pop.id.empty())
      fail(errc::invalid_argument, "population id must not be empty");
    if (!ids.insert(pop.id).second)
      fail(errc::invalid_argument, "duplicate population id '" + pop.id + "'");
    prepare_gaussian(pop.positive, dim, "population '" + pop.id + "' positive");
    prepare_gaussian(pop.negative, dim, "population '" + pop.id + "' negative");
  }

  if (config.schedule.size() < 2)
    fail(errc::invalid_argument,
         "schedule needs at least two steps: the initial version and one "
         "modification");
  for (std::size_t step = 0; step < config.schedule.size(); ++step)
    check_mixture(config.schedule[step], &ids,
                  "mixture at step " + std::to_string(step));

  if (config.partition_sizes.train < 1 ||
      config.partition_sizes.validation < 1 || config.partition_sizes.test < 1)
    fail(errc::invalid_argument, "partition sizes must all be positive");
  if (config.num_repetitions < 1)
    fail(errc::invalid_argument, "num_repetitions must be positive");
  if (!std::isfinite(config.training.learning_rate) ||
      config.training.learning_rate <= 0.0)
    fail(errc::invalid_argument, "learning rate must be finite and positive");
  if (config.training.epochs < 0)
    fail(errc::invalid_argument, "epochs must be nonnegative");
}

std::vector<int> allocate_counts(const Mixture& mixture, int total) {
  check_mixture(mixture, nullptr, "mixture");
  if (total < 0)
    fail(errc::invalid_argument, "total sample count must be nonnegative");

  std::vector<int> counts(mixture.size(), 0);
  std::vector<double> remainders(mixture.size(), 0.0);
  int assigned = 0;
  for (std::size_t i = 0; i < mixture.size(); ++i) {
    const double quota = mixture[i].fraction * static_cast<double>(total);
    counts[i] = static_cast<int>(std::floor(quota));
    remainders[i] = quota - std::floor(quota);
    assigned += counts[i];
  }
  const int leftover = total - assigned;
  std::vector<std::size_t> order(mixture.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (remainders[a] != remainders[b]) return remainders[a] > remainders[b];
    return a < b;  // equal remainders: the component listed first wins
  });
  for (int k = 0; k < leftover; ++k) ++counts[order[static_cast<std::size_t>(k)]];
  return counts;
}

Dataset sample_dataset(const std::vector<Population>& populations,
                       const Mixture& mixture, int per_class,
                       std::uint64_t seed) {
  if (populations.empty())
    fail(errc::invalid_argument, "sample_dataset needs at least one population");
  if (per_class < 1)
    fail(errc::invalid_argument, "per-class sample count must be positive");
  const std::size_t dim = populations.front().positive.mean.size();
  std::unordered_map<std::string, PreparedPopulation> prepared;
  for (const Population& pop : populations) {
    if (prepared.count(pop.id))
      fail(errc::invalid_argument, "duplicate population id '" + pop.id + "'");
    prepared.emplace(
        pop.id,
        PreparedPopulation{
            prepare_gaussian(pop.positive, dim,
                             "population '" + pop.id + "' positive"),
            prepare_gaussian(pop.negative, dim,
                             "population '" + pop.id + "' negative")});
  }
  std::unordered_set<std::string> ids;
  for (const auto& [id, pop] : prepared) ids.insert(id);
  check_mixture(mixture, &ids, "mixture");

  RandomSource rng(seed);
  return assemble_dataset(prepared, mixture, per_class, rng, nullptr);
}

double LinearModel::raw_score(std::span<const double> x) const {
  if (x.size() != weights.size())
    fail(errc::invalid_argument,
         "feature has dimension " + std::to_string(x.size()) +
             "; the model expects " + std::to_string(weights.size()));
  double dot = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) dot += weights[i] * x[i];
  return output_scale * dot + bias;
}

double logistic_loss(const LinearModel& model, const Dataset& data) {
  if (data.size() == 0)
    fail(errc::invalid_argument, "cannot evaluate loss on an empty dataset");
  if (data.dim != model.weights.size())
    fail(errc::invalid_argument,
         "dataset dimension " + std::to_string(data.dim) +
             " does not match the model dimension " +
             std::to_string(model.weights.size()));
  long double acc = 0.0L;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double z = model.raw_score(data.row(i));
    acc += softplus(z) - static_cast<double>(data.labels[i]) * z;
  }
  return static_cast<double>(acc / static_cast<long double>(data.size()));
}

LinearModel train_step(const LinearModel& model, const Dataset& train,
                       const Dataset& validation,
                       const TrainingOptions& options) {
  if (model.weights.empty())
    fail(errc::invalid_argument, "model has no weights");
  if (!model.frozen_weights.empty() &&
      model.frozen_weights.size() != model.weights.size())
    fail(errc::invalid_argument,
         "frozen mask length does not match the weight count");
  if (!std::isfinite(options.learning_rate) || options.learning_rate <= 0.0)
    fail(errc::invalid_argument, "learning rate must be finite and positive");
  if (options.epochs < 0)
    fail(errc::invalid_argument, "epochs must be nonnegative");
  const std::size_t dim = model.weights.size();
  check_split(train, dim, "train");
  check_split(validation, dim, "validation");

  if (options.epochs == 0) return model;

  const std::size_t n = train.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  LinearModel current = model;
  LinearModel best = model;
  // The unmodified model is a candidate too, so training can only improve
  // validation loss.
  double best_loss = logistic_loss(model, validation);

  std::vector<double> grad_w(dim);
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    double grad_b = 0.0;
    double grad_s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::span<const double> x = train.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < dim; ++j) dot += current.weights[j] * x[j];
      const double z = current.output_scale * dot + current.bias;
      const double delta =
          (stable_sigmoid(z) - static_cast<double>(train.labels[i])) * inv_n;
      for (std::size_t j = 0; j < dim; ++j)
        grad_w[j] += delta * current.output_scale * x[j];
      grad_b += delta;
      grad_s += delta * dot;
    }
    for (std::size_t j = 0; j < dim; ++j)
      if (model.frozen_weights.empty() || !model.frozen_weights[j])
        current.weights[j] -= options.learning_rate * grad_w[j];
    current.bias -= options.learning_rate * grad_b;
    if (current.train_scale)
      current.output_scale -= options.learning_rate * grad_s;

    const double val_loss = logistic_loss(current, validation);
    if (!std::isfinite(val_loss))
      fail(errc::internal,
           "validation loss became non-finite at epoch " +
               std::to_string(epoch) + " (learning rate " +
               std::to_string(options.learning_rate) +
               "); reduce the learning rate");
    if (val_loss < best_loss) {
      best_loss = val_loss;
      best = current;
    }
  }
  return best;
}

std::map<std::pair<int, int>, double> run_repetition(
    const ScenarioConfig& config, int repetition) {
  validate_config(config);
  if (repetition < 0 || repetition >= config.num_repetitions)
    fail(errc::invalid_argument,
         "repetition " + std::to_string(repetition) + " outside range [0, " +
             std::to_string(config.num_repetitions - 1) + "]");

  const auto num_steps = static_cast<int>(config.schedule.size());
  const std::size_t dim = config.populations.front().positive.mean.size();
  const std::uint64_t rep_seed =
      derive_seed(config.base_seed, static_cast<std::uint64_t>(repetition) + 1);

  std::unordered_map<std::string, PreparedPopulation> prepared;
  for (const Population& pop : config.populations)
    prepared.emplace(
        pop.id,
        PreparedPopulation{
            prepare_gaussian(pop.positive, dim,
                             "population '" + pop.id + "' positive"),
            prepare_gaussian(pop.negative, dim,
                             "population '" + pop.id + "' negative")});

  struct Splits {
    Dataset train;
    Dataset validation;
    Dataset test;
  };
  std::vector<Splits> splits(static_cast<std::size_t>(num_steps));
  const int sizes[3] = {config.partition_sizes.train,
                        config.partition_sizes.validation,
                        config.partition_sizes.test};
  std::array<SamplePool, 3> pools;

  for (int step = 0; step < num_steps; ++step) {
    const Mixture& mixture = config.schedule[static_cast<std::size_t>(step)];
    for (int purpose = 0; purpose < 3; ++purpose) {
      // Every (step, split) pair draws from its own substream, so changing
      // one split's size leaves the others untouched.
      RandomSource rng(derive_seed(
          rep_seed, static_cast<std::uint64_t>(step) * 3 +
                        static_cast<std::uint64_t>(purpose)));
      SamplePool* pool = config.reuse_samples
                             ? &pools[static_cast<std::size_t>(purpose)]
                             : nullptr;
      Dataset dataset =
          assemble_dataset(prepared, mixture, sizes[purpose], rng, pool);
      Splits& s = splits[static_cast<std::size_t>(step)];
      if (purpose == 0)
        s.train = std::move(dataset);
      else if (purpose == 1)
        s.validation = std::move(dataset);
      else
        s.test = std::move(dataset);
    }
  }

  std::vector<LinearModel> models(static_cast<std::size_t>(num_steps));
  {
    LinearModel init;
    init.weights.assign(dim, 0.0);
    models[0] =
        train_step(init, splits[0].train, splits[0].validation, config.training);
  }
  for (int v = 1; v < num_steps; ++v) {
    LinearModel base = models[static_cast<std::size_t>(v - 1)];
    if (config.plasticity == Plasticity::limited) {
      base.frozen_weights.assign(dim, 1);
      base.train_scale = true;
    }
    if (!config.warm_start) {
      if (config.plasticity == Plasticity::full) {
        base.weights.assign(dim, 0.0);
      }
      // In limited mode the frozen weights are the step-0 model and survive a
      // cold start; only the trainable parameters reset.
      base.bias = 0.0;
      base.output_scale = 1.0;
    }
    models[static_cast<std::size_t>(v)] = train_step(
        base, splits[static_cast<std::size_t>(v)].train,
        splits[static_cast<std::size_t>(v)].validation, config.training);
  }

  std::map<std::pair<int, int>, double> scores;
  for (int v = 0; v < num_steps; ++v) {
    for (int w = 0; w <= v; ++w)
      scores[{v, w}] = evaluate_model(models[static_cast<std::size_t>(v)],
                                      splits[static_cast<std::size_t>(w)].test);
    if (v >= 1)
      scores[{v - 1, v}] =
          evaluate_model(models[static_cast<std::size_t>(v - 1)],
                         splits[static_cast<std::size_t>(v)].test);
  }
  return scores;
}

ScoreMatrix run_scenario(const ScenarioConfig& config) {
  validate_config(config);
  ScoreMatrix::Builder builder;
  builder.metric("auroc", MetricRange{0.0, 1.0});
  for (int rep = 0; rep < config.num_repetitions; ++rep) {
    const auto cells = run_repetition(config, rep);
    for (const auto& [key, score] : cells)
      builder.add(key.first, key.second, rep, score);
  }
  return builder.build();
}

namespace {

Population planar_population(std::string id, double angle_deg,
                             double separation, std::size_t dim) {
  const double rad = angle_deg * kPi / 180.0;
  std::vector<double> direction(dim, 0.0);
  direction[0] = std::cos(rad);
  direction[1] = std::sin(rad);

  Population pop;
  pop.id = std::move(id);
  pop.positive.mean.assign(dim, 0.0);
  pop.negative.mean.assign(dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) {
    pop.positive.mean[i] = 0.5 * separation * direction[i];
    pop.negative.mean[i] = -0.5 * separation * direction[i];
  }
  std::vector<double> identity(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) identity[i * dim + i] = 1.0;
  pop.positive.covariance = identity;
  pop.negative.covariance = std::move(identity);
  return pop;
}

}  // namespace

const char* preset_name(Preset preset) {
  switch (preset) {
    case Preset::single_shift:
      return "single-shift";
    case Preset::single_shift_limited:
      return "single-shift-limited";
    case Preset::double_shift:
      return "double-shift";
  }
  fail(errc::internal, "unknown preset");
}

std::optional<Preset> preset_from_name(std::string_view name) {
  // Underscores are accepted as separators too.
  std::string normalized(name);
  std::replace(normalized.begin(), normalized.end(), '_', '-');
  for (const Preset preset : all_presets())
    if (normalized == preset_name(preset)) return preset;
  return std::nullopt;
}

std::vector<Preset> all_presets() {
  return {Preset::single_shift, Preset::single_shift_limited,
          Preset::double_shift};
}

ScenarioConfig single_shift_with_separation(double incoming_separation,
                                            double partition_scale) {
  if (!std::isfinite(incoming_separation) || incoming_separation <= 0.0)
    fail(errc::invalid_argument,
         "incoming separation must be finite and positive");
  ScenarioConfig config = preset_config(Preset::single_shift, partition_scale);
  // Both populations share the feature direction; only the class separation
  // differs, so the sign of potential is decided purely by difficulty.
  config.populations[1] =
      planar_population("B", 0.0, incoming_separation,
                        config.populations[1].positive.mean.size());
  return config;
}

PartitionSizes scaled_partition_sizes(double partition_scale) {
  if (!std::isfinite(partition_scale) || partition_scale <= 0.0 ||
      partition_scale > 10.0)
    fail(errc::invalid_argument, "partition scale must lie in (0, 10]");
  const auto scaled = [&](int base) {
    return std::max(
        1, static_cast<int>(std::llround(base * partition_scale)));
  };
  return PartitionSizes{scaled(525), scaled(75), scaled(150)};
}

ScenarioConfig preset_config(Preset preset, double partition_scale) {
  constexpr std::size_t dim = 10;
  // Class separation 2.6 puts a well-fit model near 0.97 AUROC, leaving
  // visible headroom below 1.0 for shifts to show up in.
  constexpr double separation = 2.6;
  // Gradual-shift presets rotate the feature direction by 45 degrees: the
  // stale model stays near 0.90 AUROC on the incoming population, so its
  // decay per step is gentle enough that retention moves within its
  // uncertainty while potential remains visibly positive.
  constexpr double gradual_rotation = 45.0;
  // The double-shift preset uses a sharper 55 degree hop per population so
  // each introduction produces a clear potential spike.
  constexpr double abrupt_rotation = 55.0;

  ScenarioConfig config;
  config.partition_sizes = scaled_partition_sizes(partition_scale);

  switch (preset) {
    case Preset::single_shift:
    case Preset::single_shift_limited:
      config.populations = {
          planar_population("A", 0.0, separation, dim),
          planar_population("B", gradual_rotation, separation, dim),
      };
      config.schedule = {
          Mixture{{"A", 1.0}},
          Mixture{{"A", 0.75}, {"B", 0.25}},
          Mixture{{"A", 0.5}, {"B", 0.5}},
          Mixture{{"A", 0.25}, {"B", 0.75}},
          Mixture{{"B", 1.0}},
      };
      config.plasticity = preset == Preset::single_shift_limited
                              ? Plasticity::limited
                              : Plasticity::full;
      break;
    case Preset::double_shift:
      config.populations = {
          planar_population("A", 0.0, separation, dim),
          planar_population("B", abrupt_rotation, separation, dim),
          planar_population("C", 2.0 * abrupt_rotation, separation, dim),
      };
      config.schedule = {
          Mixture{{"A", 1.0}},
          Mixture{{"A", 0.5}, {"B", 0.5}},
          Mixture{{"B", 1.0}},
          Mixture{{"B", 0.5}, {"C", 0.5}},
          Mixture{{"C", 1.0}},
      };
      break;
  }
  return config;
}

}  // namespace adaptrace
