#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "measurements.hpp"
#include "score_matrix.hpp"

using namespace adaptrace;

namespace {

// Fully populated steps x steps matrix; score_of(model, dataset, repetition).
template <typename F>
ScoreMatrix full_matrix(int steps, int reps, F&& score_of,
                        MetricRange range = {0.0, 1.0}) {
  ScoreMatrix::Builder builder;
  builder.metric("auroc", range);
  for (int m = 0; m < steps; ++m)
    for (int d = 0; d < steps; ++d)
      for (int r = 0; r < reps; ++r)
        builder.add(m, d, r, score_of(m, d, r));
  return builder.build();
}

// The two-step toy comparison: a model moving from 0.6 to 0.8 while the old
// model scores `stale` on the new dataset.
ScoreMatrix two_step_matrix(double stale) {
  ScoreMatrix::Builder builder;
  builder.add(0, 0, 0, 0.6);
  builder.add(1, 1, 0, 0.8);
  builder.add(0, 1, 0, stale);
  builder.add(1, 0, 0, 0.7);
  return builder.build();
}

}  // namespace

TEST_CASE("learning and potential separate model change from dataset change") {
  // Dataset kept pace with the model: nothing was learned, and the old model
  // already lost ground on the new data.
  const ScoreMatrix kept_pace = two_step_matrix(0.8);
  CHECK(learning(kept_pace, 1, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(potential(kept_pace, 1, 0) == doctest::Approx(-0.2).epsilon(1e-12));

  // Dataset unchanged in difficulty: the improvement is real learning and the
  // old model had nothing left to gain.
  const ScoreMatrix improved = two_step_matrix(0.6);
  CHECK(learning(improved, 1, 0) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(potential(improved, 1, 0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("learning minus potential telescopes to the performance delta") {
  std::mt19937_64 rng(515151);
  for (int round = 0; round < 200; ++round) {
    const int steps = 2 + static_cast<int>(rng() % 5);
    const int reps = 1 + static_cast<int>(rng() % 3);
    const ScoreMatrix matrix = full_matrix(steps, reps, [&](int, int, int) {
      return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    });
    for (int step = 1; step < steps; ++step)
      for (int r = 0; r < reps; ++r) {
        const double delta = matrix.at(step, step, r) -
                             matrix.at(step - 1, step - 1, r);
        CHECK(std::abs(learning(matrix, step, r) - potential(matrix, step, r) -
                       delta) <= 1e-12);
      }
  }
}

TEST_CASE("learning and potential ignore a constant score offset") {
  std::mt19937_64 rng(616161);
  const ScoreMatrix base = full_matrix(4, 2, [&](int, int, int) {
    return 0.2 + 0.6 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  });
  const double shift = 0.07;
  const ScoreMatrix shifted = full_matrix(
      4, 2,
      [&](int m, int d, int r) { return base.at(m, d, r) + shift; },
      MetricRange{0.0, 2.0});

  for (int step = 1; step < 4; ++step)
    for (int r = 0; r < 2; ++r) {
      CHECK(std::abs(learning(shifted, step, r) - learning(base, step, r)) <=
            1e-12);
      CHECK(std::abs(potential(shifted, step, r) - potential(base, step, r)) <=
            1e-12);
      CHECK(std::abs(retention(shifted, step, 0.5, r) -
                     (retention(base, step, 0.5, r) + shift)) <= 1e-12);
    }
}

TEST_CASE("decay weights match hand-computed values") {
  const auto two = decay_weights(2, 0.5);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == doctest::Approx(0.37754066879814546).epsilon(1e-13));
  CHECK(two[1] == doctest::Approx(0.6224593312018546).epsilon(1e-13));

  const auto three = decay_weights(3, 0.5);
  REQUIRE(three.size() == 3);
  CHECK(three[0] == doctest::Approx(0.1863237232258476).epsilon(1e-13));
  CHECK(three[1] == doctest::Approx(0.3071958857184984).epsilon(1e-13));
  CHECK(three[2] == doctest::Approx(0.506480391055654).epsilon(1e-13));

  const auto uniform = decay_weights(3, 0.0);
  for (double w : uniform)
    CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("decay weights normalize and order by recency for any lambda") {
  for (int step = 1; step <= 10; ++step) {
    for (const double lambda : {0.0, 0.25, 0.5, 1.0, 5.0}) {
      const auto weights = decay_weights(step, lambda);
      REQUIRE(weights.size() == static_cast<std::size_t>(step));
      long double total = 0.0L;
      for (double w : weights) {
        CHECK(w > 0.0);
        total += w;
      }
      CHECK(std::abs(static_cast<double>(total) - 1.0) <= 1e-12);
      // More recent prior versions never weigh less.
      CHECK(std::is_sorted(weights.begin(), weights.end()));
      if (lambda == 0.0)
        for (double w : weights)
          CHECK(w == doctest::Approx(1.0 / step).epsilon(1e-12));
    }
  }
  // A steep decay concentrates everything on the newest prior version.
  const auto steep = decay_weights(4, 50.0);
  CHECK(steep.back() > 1.0 - 1e-6);
}

TEST_CASE("decay weights reject a step without priors and bad lambdas") {
  CHECK_THROWS_AS(decay_weights(0, 0.5), Error);
  CHECK_THROWS_AS(decay_weights(-1, 0.5), Error);
  CHECK_THROWS_AS(decay_weights(2, -0.1), Error);
  CHECK_THROWS_AS(decay_weights(2, std::nan("")), Error);
}

TEST_CASE("retention is the decay-weighted mean of prior-dataset scores") {
  ScoreMatrix::Builder builder;
  builder.add(0, 0, 0, 0.55);
  builder.add(1, 1, 0, 0.6);
  builder.add(0, 1, 0, 0.5);
  builder.add(1, 0, 0, 0.5);
  builder.add(2, 2, 0, 0.62);
  builder.add(1, 2, 0, 0.58);
  builder.add(2, 0, 0, 0.5);
  builder.add(2, 1, 0, 0.6);
  builder.add(3, 3, 0, 0.8);
  builder.add(2, 3, 0, 0.61);
  builder.add(3, 0, 0, 0.5);
  builder.add(3, 1, 0, 0.6);
  builder.add(3, 2, 0, 0.9);
  const ScoreMatrix matrix = builder.build();

  // Weighted combination of 0.5, 0.6, 0.9 with the lambda = 0.5 weights.
  CHECK(retention(matrix, 3, 0.5, 0) ==
        doctest::Approx(0.7333117449941114).epsilon(1e-13));
  // lambda = 0 averages priors uniformly: (0.5 + 0.6) / 2 at step 2.
  CHECK(retention(matrix, 2, 0.0, 0) == doctest::Approx(0.55).epsilon(1e-13));
  // A steep decay reduces retention to the newest prior score.
  CHECK(retention(matrix, 3, 60.0, 0) == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("retention stays inside the range of its prior scores") {
  std::mt19937_64 rng(787878);
  for (int round = 0; round < 200; ++round) {
    const int steps = 2 + static_cast<int>(rng() % 6);
    const ScoreMatrix matrix = full_matrix(steps, 1, [&](int, int, int) {
      return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    });
    const double lambda =
        (static_cast<double>(rng() >> 11) * 0x1.0p-53) * 4.0;
    for (int step = 1; step < steps; ++step) {
      double lo = 1.0, hi = 0.0;
      for (int v = 0; v < step; ++v) {
        lo = std::min(lo, matrix.at(step, v, 0));
        hi = std::max(hi, matrix.at(step, v, 0));
      }
      const double value = retention(matrix, step, lambda, 0);
      CHECK(value >= lo - 1e-12);
      CHECK(value <= hi + 1e-12);
    }
  }
}

TEST_CASE("measurements are undefined at step 0") {
  const ScoreMatrix matrix = two_step_matrix(0.6);
  for (const char* name : {"learning", "potential", "retention"}) {
    try {
      if (std::string(name) == "learning")
        learning(matrix, 0, 0);
      else if (std::string(name) == "potential")
        potential(matrix, 0, 0);
      else
        retention(matrix, 0, 0.5, 0);
      FAIL("expected an error for ", name);
    } catch (const Error& e) {
      CHECK(e.code() == errc::invalid_argument);
      CHECK(std::string(e.what()).find("undefined at step 0") !=
            std::string::npos);
    }
  }
}

TEST_CASE("measurements name the missing cell of an incomplete matrix") {
  ScoreMatrix::Builder builder;
  builder.add(0, 0, 0, 0.6);
  builder.add(1, 1, 0, 0.8);
  builder.add(1, 0, 0, 0.7);
  const ScoreMatrix matrix = builder.build();  // (0, 1) absent

  try {
    learning(matrix, 1, 0);
    FAIL("expected an incompleteness error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::incomplete);
    CHECK(std::string(e.what()).find("model_step=0, dataset_step=1") !=
          std::string::npos);
  }
  CHECK_THROWS_AS(potential(matrix, 1, 0), Error);
  // Retention only needs prior-dataset scores, which are all present.
  CHECK(retention(matrix, 1, 0.5, 0) == doctest::Approx(0.7).epsilon(1e-13));

  CHECK_THROWS_AS(learning(matrix, 2, 0), Error);   // beyond last step
  CHECK_THROWS_AS(learning(matrix, 1, 1), Error);   // beyond repetitions
}

TEST_CASE("retention reports every absent prior cell at once") {
  ScoreMatrix::Builder builder;
  builder.add(0, 0, 0, 0.6);
  builder.add(1, 1, 0, 0.7);
  builder.add(0, 1, 0, 0.6);
  builder.add(1, 0, 0, 0.6);
  builder.add(2, 2, 0, 0.7);
  builder.add(1, 2, 0, 0.6);
  builder.add(3, 3, 0, 0.7);
  builder.add(2, 3, 0, 0.6);
  const ScoreMatrix matrix = builder.build();

  try {
    retention(matrix, 3, 0.5, 0);
    FAIL("expected an incompleteness error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::incomplete);
    const std::string what = e.what();
    CHECK(what.find("model_step=3, dataset_step=0") != std::string::npos);
    CHECK(what.find("model_step=3, dataset_step=1") != std::string::npos);
    CHECK(what.find("model_step=3, dataset_step=2") != std::string::npos);
  }
}

TEST_CASE("measurement series aggregates every step over repetitions") {
  const ScoreMatrix matrix = full_matrix(3, 2, [](int m, int d, int r) {
    return 0.5 + 0.1 * m - 0.05 * d + 0.01 * r;
  });
  const MeasurementSeries series = measurement_series(matrix, 0.5, 0.95);

  REQUIRE(series.points.size() == 3);
  CHECK(series.num_repetitions == 2);
  CHECK(series.lambda == 0.5);
  CHECK(series.confidence == 0.95);
  CHECK(series.warnings.empty());

  CHECK_FALSE(series.points[0].learning.has_value());
  CHECK_FALSE(series.points[0].potential.has_value());
  CHECK_FALSE(series.points[0].retention.has_value());
  for (int step = 1; step < 3; ++step) {
    REQUIRE(series.points[step].learning.has_value());
    REQUIRE(series.points[step].potential.has_value());
    REQUIRE(series.points[step].retention.has_value());
  }

  // Performance at step s averages the (s, s) cells over repetitions.
  CHECK(series.points[1].performance.mean ==
        doctest::Approx(0.5 + 0.1 - 0.05 + 0.005).epsilon(1e-12));
  // Learning is constant 0.1 across repetitions here, so the interval
  // collapses.
  CHECK(series.points[1].learning->mean ==
        doctest::Approx(0.1).epsilon(1e-12));
  CHECK(series.points[1].learning->ci_low ==
        series.points[1].learning->ci_high);
  // Each interval brackets its mean.
  for (const MeasurementPoint& point : series.points) {
    CHECK(point.performance.ci_low <= point.performance.mean);
    CHECK(point.performance.mean <= point.performance.ci_high);
  }
}

TEST_CASE("measurement series does not depend on repetition order") {
  std::mt19937_64 rng(123123);
  std::vector<double> scores;
  for (int i = 0; i < 9 * 3; ++i)
    scores.push_back(static_cast<double>(rng() >> 11) * 0x1.0p-53);

  const auto matrix_with = [&](const std::vector<int>& rep_order) {
    ScoreMatrix::Builder builder;
    int i = 0;
    for (int m = 0; m < 3; ++m)
      for (int d = 0; d < 3; ++d) {
        for (int r = 0; r < 3; ++r)
          builder.add(m, d, rep_order[static_cast<std::size_t>(r)],
                      scores[static_cast<std::size_t>(i * 3 + r)]);
        ++i;
      }
    return builder.build();
  };

  const MeasurementSeries base = measurement_series(matrix_with({0, 1, 2}),
                                                    0.5, 0.95);
  CHECK(measurement_series(matrix_with({2, 0, 1}), 0.5, 0.95) == base);
  CHECK(measurement_series(matrix_with({1, 2, 0}), 0.5, 0.95) == base);
}

TEST_CASE("measurement series warns when intervals are degenerate") {
  const ScoreMatrix matrix = two_step_matrix(0.6);
  const MeasurementSeries series = measurement_series(matrix, 0.5, 0.95);
  REQUIRE(series.warnings.size() == 2);
  for (const SeriesWarning& warning : series.warnings)
    CHECK(warning.message.find("only one repetition") != std::string::npos);
  CHECK(series.points[0].performance.degenerate);
  CHECK(series.points[1].learning->degenerate);
}

TEST_CASE("measurement series lists every missing cell up front") {
  ScoreMatrix::Builder builder;
  builder.add(0, 0, 0, 0.6);
  builder.add(1, 1, 0, 0.8);
  const ScoreMatrix matrix = builder.build();  // both cross cells absent

  try {
    measurement_series(matrix, 0.5, 0.95);
    FAIL("expected an incompleteness error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::incomplete);
    const std::string what = e.what();
    CHECK(what.find("matrix is incomplete") != std::string::npos);
    CHECK(what.find("model_step=0, dataset_step=1") != std::string::npos);
    CHECK(what.find("model_step=1, dataset_step=0") != std::string::npos);
  }

  CHECK_THROWS_AS(measurement_series(two_step_matrix(0.6), -1.0, 0.95), Error);
  CHECK_THROWS_AS(measurement_series(two_step_matrix(0.6), 0.5, 1.5), Error);
}

TEST_CASE("score matrix builder validates and freezes its input") {
  ScoreMatrix::Builder builder;
  builder.add(0, 0, 0, 0.6);
  CHECK(builder.contains(0, 0, 0));
  CHECK_FALSE(builder.contains(0, 1, 0));

  CHECK_THROWS_AS(builder.add(0, 0, 0, 0.7), Error);        // duplicate
  CHECK_THROWS_AS(builder.add(-1, 0, 0, 0.5), Error);       // negative index
  CHECK_THROWS_AS(builder.add(0, 1, 0, 1.5), Error);        // out of range
  CHECK_THROWS_AS(builder.add(0, 1, 0, std::nan("")), Error);

  const ScoreMatrix matrix = builder.build();
  CHECK(matrix.num_steps() == 1);
  CHECK(matrix.num_repetitions() == 1);
  CHECK(matrix.metric_name() == "auroc");
  CHECK(matrix.metric_range() == MetricRange{0.0, 1.0});
  CHECK(matrix.find(0, 0, 0) == 0.6);
  CHECK_FALSE(matrix.find(0, 1, 0).has_value());

  CHECK_THROWS_AS(ScoreMatrix::Builder{}.build(), Error);   // empty

  ScoreMatrix::Builder ragged;
  ragged.add(0, 0, 0, 0.5);
  ragged.add(0, 0, 2, 0.5);  // repetition 1 never appears
  CHECK_THROWS_AS(ragged.build(), Error);
}

TEST_CASE("score matrix knows which measurements each step supports") {
  ScoreMatrix::Builder builder;
  builder.add(0, 0, 0, 0.6);
  builder.add(1, 1, 0, 0.8);
  builder.add(0, 1, 0, 0.7);
  const ScoreMatrix matrix = builder.build();  // (1, 0) absent

  CHECK(matrix.supports(Measurement::performance, 0));
  CHECK(matrix.supports(Measurement::performance, 1));
  CHECK(matrix.supports(Measurement::learning, 1));
  CHECK(matrix.supports(Measurement::potential, 1));
  CHECK_FALSE(matrix.supports(Measurement::retention, 1));
  CHECK_FALSE(matrix.supports(Measurement::learning, 0));

  const auto missing = matrix.missing_cells(Measurement::retention, 1);
  REQUIRE(missing.size() == 1);
  CHECK(missing[0] == Cell{1, 0, 0});
  CHECK(matrix.missing_cells(Measurement::learning, 1).empty());
  CHECK_THROWS_AS(matrix.missing_cells(Measurement::learning, 0), Error);
}
