#include <gtest/gtest.h>

#include <random>

#include "fdplab/estimators.hpp"
#include "oracles.hpp"

using namespace fdplab;

namespace {

// m values with r_lambda of them at 0.1 and the rest spread over (lambda, 1].
TailView view_with(std::size_t m, double lambda, std::size_t r_lambda) {
  std::vector<double> tail;
  for (std::size_t i = 0; i < m - r_lambda; ++i) {
    tail.push_back(lambda + (1.0 - lambda) * (static_cast<double>(i) + 1.0) / static_cast<double>(m - r_lambda));
  }
  return TailView(m, lambda, r_lambda, tail);
}

PValueSample random_sample(std::mt19937_64& gen, std::size_t m) {
  auto v = oracle::uniform_vector(gen, m);
  for (std::size_t i = 0; i < m / 3; ++i) v[i] *= 0.2;
  return PValueSample::nulls_first(v, m);
}

}  // namespace

TEST(Storey, Examples) {
  EXPECT_DOUBLE_EQ(storey_estimate(view_with(100, 0.5, 60)), 82.0);
  EXPECT_DOUBLE_EQ(storey_estimate(view_with(10, 0.5, 10)), 2.0);
  EXPECT_DOUBLE_EQ(storey_estimate(view_with(10, 0.5, 0)), 22.0);
}

TEST(IntervalEstimate, Examples) {
  EXPECT_DOUBLE_EQ(interval_estimate(view_with(100, 0.5, 60), 0.5, 1.0), 82.0);
  // nothing in (0.5, 0.75]
  const TailView empty(10, 0.5, 0, std::vector<double>(10, 0.9));
  EXPECT_DOUBLE_EQ(interval_estimate(empty, 0.5, 0.75), 4.0);
  const TailView full(10, 0.5, 0, std::vector<double>(10, 0.7));
  EXPECT_DOUBLE_EQ(interval_estimate(full, 0.5, 1.0), 22.0);
  EXPECT_THROW(interval_estimate(full, 0.4, 1.0), std::domain_error);
  EXPECT_THROW(interval_estimate(full, 0.8, 0.7), std::domain_error);
}

TEST(CombinedEstimate, SingleIntervalEqualsIntervalEstimate) {
  const auto view = view_with(100, 0.5, 60);
  const auto spec = EstimatorSpec::combination({0.5, 1.0}, {1.0});
  EXPECT_DOUBLE_EQ(combined_estimate(spec, view), interval_estimate(view, 0.5, 1.0));
}

TEST(CombinedEstimate, ConvexFixedPoint) {
  // 1 value in each quarter interval of (0.5, 1] -> both interval estimates (1+1)/0.25 = 8
  const TailView view(10, 0.5, 8, {0.6, 0.9});
  const auto spec = EstimatorSpec::combination({0.5, 0.75, 1.0}, {0.3, 0.7});
  EXPECT_DOUBLE_EQ(interval_estimate(view, 0.5, 0.75), 8.0);
  EXPECT_DOUBLE_EQ(interval_estimate(view, 0.75, 1.0), 8.0);
  EXPECT_DOUBLE_EQ(combined_estimate(spec, view), 8.0);
}

TEST(CombinedEstimate, HandExample) {
  // interval estimates (count + 1) / 0.25: 19 values give 80, 9 give 40
  std::vector<double> tail(19, 0.6);
  tail.insert(tail.end(), 9, 0.9);
  const TailView view(100, 0.5, 72, tail);
  const auto spec = EstimatorSpec::combination({0.5, 0.75, 1.0}, {0.5, 0.5});
  EXPECT_DOUBLE_EQ(combined_estimate(spec, view), 60.0);
}

TEST(EstimatorSpecValidation, GridAndWeights) {
  EXPECT_THROW(EstimatorSpec::combination({0.5, 0.4, 1.0}, {0.5, 0.5}), std::invalid_argument);
  EXPECT_THROW(EstimatorSpec::combination({0.5, 0.75, 0.9}, {0.5, 0.5}), std::invalid_argument);
  EXPECT_THROW(EstimatorSpec::combination({0.5, 0.75, 1.0}, {0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(EstimatorSpec::combination({0.5, 0.75, 1.0}, {-0.1, 1.1}), std::invalid_argument);
  EXPECT_THROW(EstimatorSpec::combination({0.5, 1.0}, {0.5, 0.5}), std::invalid_argument);
  EXPECT_NO_THROW(EstimatorSpec::combination({0.5, 0.75, 1.0}, {0.25, 0.75}));
}

TEST(ApplyFloor, Examples) {
  const auto view = view_with(100, 0.5, 60);
  const auto a = apply_floor(82.0, view, 0.1);
  EXPECT_DOUBLE_EQ(a.floored, 82.0);
  EXPECT_FALSE(a.floor_active);
  const auto b = apply_floor(5.0, view, 0.5);
  EXPECT_DOUBLE_EQ(b.floored, 60.0);
  EXPECT_TRUE(b.floor_active);
  const auto c = apply_floor(3.5, view_with(10, 0.5, 0), 0.5);
  EXPECT_DOUBLE_EQ(c.floored, 3.5);
  EXPECT_THROW(apply_floor(0.0, view, 0.1), std::domain_error);
}

TEST(ApplyFloor, FlooredSatisfiesLowerBound) {
  std::mt19937_64 gen(21);
  for (int t = 0; t < 500; ++t) {
    const auto s = random_sample(gen, 50);
    const auto view = tail_view(s, 0.5);
    const auto rec = apply_floor(storey_estimate(view), view, 0.3);
    ASSERT_GE(0.5 / 0.3 * rec.floored, static_cast<double>(view.r_lambda()) * (1 - 1e-15));
  }
}

TEST(MonotonicityProbe, Examples) {
  std::mt19937_64 gen(22);
  const auto s = random_sample(gen, 40);
  EXPECT_TRUE(monotonicity_probe(EstimatorSpec::trivial(), s, 0.5, 500, 1));
  EXPECT_TRUE(monotonicity_probe(EstimatorSpec::storey(), s, 0.5, 500, 2));
  EXPECT_TRUE(monotonicity_probe(EstimatorSpec::combination({0.5, 0.75, 1.0}, {0.25, 0.75}), s, 0.5, 500, 3));
}

TEST(MonotonicityProbe, FindsCounterexampleForUnorderedWeights) {
  // density 3 on (0.5,0.75] and 1 on (0.75,1]: moving a value from the first
  // interval into the second lowers the estimate
  const auto bad = EstimatorSpec::combination({0.5, 0.75, 1.0}, {0.75, 0.25});
  EXPECT_FALSE(weights_ordered(bad.grid(), bad.weights()));
  bool found = false;
  std::mt19937_64 gen(23);
  for (int t = 0; t < 200 && !found; ++t) {
    const auto s = random_sample(gen, 6);
    found = !monotonicity_probe(bad, s, 0.5, 50, static_cast<std::uint64_t>(t));
  }
  EXPECT_TRUE(found);
}

TEST(Estimators, PositivityAndA3Bound) {
  std::mt19937_64 gen(24);
  const std::vector<EstimatorSpec> specs{EstimatorSpec::storey(),
                                         EstimatorSpec::combination({0.5, 0.75, 1.0}, {0.25, 0.75}),
                                         EstimatorSpec::nested_tail({0.5, 0.6, 0.8, 1.0})};
  for (int t = 0; t < 300; ++t) {
    const std::size_t m = 1 + gen() % 60;
    auto v = oracle::uniform_vector(gen, m);
    if (t % 3 == 0) {
      for (auto& x : v) x *= 0.5;
    }
    const auto view = tail_view(PValueSample::nulls_first(v, m), 0.5);
    for (const auto& spec : specs) {
      const double e = raw_estimate(spec, view);
      ASSERT_GT(e, 0.0);
      ASSERT_LE(e, a3_constant(spec, 0.5) * static_cast<double>(m));
    }
  }
  EXPECT_DOUBLE_EQ(a3_constant(EstimatorSpec::trivial(), 0.5), 1.0);
  EXPECT_DOUBLE_EQ(a3_constant(EstimatorSpec::combination({0.5, 0.75, 1.0}, {0.25, 0.75}), 0.5), 16.0);
}

TEST(Estimators, StoreyAsWidthWeightedCombinationCarriesKOverM) {
  std::mt19937_64 gen(25);
  const std::vector<double> grid{0.5, 0.6, 0.8, 1.0};
  const std::size_t k = grid.size() - 1;
  std::vector<double> weights;
  for (std::size_t i = 1; i < grid.size(); ++i) weights.push_back((grid[i] - grid[i - 1]) / 0.5);
  weights.back() = 1.0 - weights[0] - weights[1];
  const auto spec = EstimatorSpec::combination(grid, weights);
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = 5 + gen() % 100;
    const auto view = tail_view(PValueSample::nulls_first(oracle::uniform_vector(gen, m), m), 0.5);
    const double expected =
        (static_cast<double>(m - view.r_lambda()) + static_cast<double>(k)) / 0.5;  // m(1 - F + k/m)/(1-lambda)
    ASSERT_NEAR(combined_estimate(spec, view), expected, 1e-10);
  }
}

TEST(Estimators, IgnoreValuesBelowLambda) {
  std::mt19937_64 gen(26);
  auto v = oracle::uniform_vector(gen, 80);
  const auto spec = EstimatorSpec::nested_tail({0.5, 0.75, 1.0});
  const double before = raw_estimate(spec, tail_view(PValueSample::nulls_first(v, 80), 0.5));
  std::vector<double> below;
  for (auto x : v) if (x <= 0.5) below.push_back(x);
  std::shuffle(below.begin(), below.end(), gen);
  std::size_t b = 0;
  for (auto& x : v) if (x <= 0.5) x = below[b++] * 0.3;
  EXPECT_EQ(raw_estimate(spec, tail_view(PValueSample::nulls_first(v, 80), 0.5)), before);
}

TEST(NestedTailWeights, OrderedSummingToOne) {
  std::mt19937_64 gen(27);
  const auto spec = EstimatorSpec::nested_tail({0.4, 0.55, 0.7, 0.85, 1.0});
  for (int t = 0; t < 300; ++t) {
    const std::size_t m = 1 + gen() % 200;
    auto v = oracle::uniform_vector(gen, m);
    for (std::size_t i = 0; i < m; ++i) {
      if (gen() % 2) v[i] = 0.4 + 0.6 * v[i];
    }
    const auto view = tail_view(PValueSample::nulls_first(v, m), 0.4);
    const auto beta = combination_weights(spec, view);
    double sum = 0.0;
    for (double w : beta) {
      ASSERT_GE(w, 0.0);
      sum += w;
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
    ASSERT_TRUE(weights_ordered(spec.grid(), beta));
  }
}

TEST(NestedTailWeights, TwoIntervalsAreFixed) {
  const TailView view(10, 0.5, 5, {0.6, 0.7, 0.8, 0.9, 1.0});
  const auto beta = combination_weights(EstimatorSpec::nested_tail({0.5, 0.75, 1.0}), view);
  EXPECT_DOUBLE_EQ(beta[0], 0.25);
  EXPECT_DOUBLE_EQ(beta[1], 0.75);
}

TEST(NestedTailWeights, WeightOnlyReadsItsOwnTail) {
  // changing values inside (lambda_0, lambda_1] must leave beta_2..beta_k alone
  const auto spec = EstimatorSpec::nested_tail({0.4, 0.55, 0.7, 0.85, 1.0});
  std::mt19937_64 gen(28);
  for (int t = 0; t < 100; ++t) {
    auto v = oracle::uniform_vector(gen, 60);
    const auto b1 = combination_weights(spec, tail_view(PValueSample::nulls_first(v, 60), 0.4));
    for (auto& x : v) {
      if (x > 0.4 && x <= 0.55) x = 0.4 + 0.15 * (x - 0.4) / 0.15 * 0.5 + 1e-9;
    }
    const auto b2 = combination_weights(spec, tail_view(PValueSample::nulls_first(v, 60), 0.4));
    for (std::size_t i = 1; i < b1.size(); ++i) ASSERT_EQ(b1[i], b2[i]);
  }
}
