#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fdplab/models.hpp"

using namespace fdplab;

TEST(AltCdf, Examples) {
  EXPECT_DOUBLE_EQ(alt_cdf(DiracAlt{0.0}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(alt_cdf(UniformAlt{0.4}, 0.2), 0.5);
  EXPECT_DOUBLE_EQ(alt_cdf(MinUniformAlt{1.0 / 6.0}, 0.1), 0.1);
  EXPECT_DOUBLE_EQ(alt_cdf(MinUniformAlt{1.0 / 6.0}, 0.2), 1.0);
  EXPECT_DOUBLE_EQ(alt_cdf(DiracAlt{0.3}, 0.29), 0.0);
  EXPECT_DOUBLE_EQ(alt_cdf(DiracAlt{0.3}, 0.3), 1.0);
}

TEST(AltCdf, PiecewiseLinearWithJump) {
  const PiecewiseLinearAlt alt{{{0.0, 0.0}, {0.2, 0.4}, {0.2, 0.7}, {1.0, 1.0}}};
  EXPECT_NO_THROW(validate_alt(alt));
  EXPECT_DOUBLE_EQ(alt_cdf(alt, 0.1), 0.2);
  EXPECT_DOUBLE_EQ(alt_cdf(alt, 0.2), 0.7);
  EXPECT_DOUBLE_EQ(alt_cdf(alt, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(alt_quantile(alt, 0.5), 0.2);
  EXPECT_NEAR(alt_quantile(alt, 0.1), 0.05, 1e-15);
  EXPECT_THROW(validate_alt(PiecewiseLinearAlt{{{0.0, 0.0}, {1.0, 0.9}}}), std::invalid_argument);
  EXPECT_THROW(validate_alt(PiecewiseLinearAlt{{{0.0, 0.5}, {0.5, 0.2}, {1.0, 1.0}}}), std::invalid_argument);
}

TEST(SampleScenario, DiracZeroIsExact) {
  const ScenarioConfig cfg{20, 3, DiracAlt{0.0}, 7};
  const auto s = sample_scenario(cfg, 0);
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < s.m(); ++i) {
    if (!s.null_at(i)) {
      EXPECT_EQ(s.value(i), 0.0);
      ++zeros;
    }
  }
  EXPECT_EQ(zeros, 3u);
  EXPECT_EQ(s.m0(), 17u);
}

TEST(SampleScenario, ReproducibleAndOrderIndependent) {
  const ScenarioConfig cfg{50, 10, UniformAlt{0.5}, 99};
  const auto a = sample_scenario(cfg, 17);
  sample_scenario(cfg, 3);
  const auto b = sample_scenario(cfg, 17);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  const auto c = sample_scenario(cfg, 18);
  EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
  const ScenarioConfig other{50, 10, UniformAlt{0.5}, 100};
  const auto d = sample_scenario(other, 17);
  EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), d.values().begin()));
}

TEST(SampleScenario, RejectsBadConfig) {
  EXPECT_THROW(sample_scenario({10, 10, DiracAlt{0.0}, 1}, 0), std::invalid_argument);
  EXPECT_THROW(sample_scenario({10, 2, UniformAlt{0.0}, 1}, 0), std::invalid_argument);
}

TEST(SampleScenario, EmpiricalCdfTracksModel) {
  const std::vector<AltModel> models{UniformAlt{0.5}, MinUniformAlt{1.0 / 6.0},
                                     PiecewiseLinearAlt{{{0.0, 0.0}, {0.1, 0.6}, {1.0, 1.0}}}};
  for (const auto& alt : models) {
    const ScenarioConfig cfg{10001, 10000, alt, 5};
    const auto s = sample_scenario(cfg, 0);
    std::vector<double> alts;
    for (std::size_t i = 0; i < s.m(); ++i) {
      if (!s.null_at(i)) alts.push_back(s.value(i));
    }
    std::sort(alts.begin(), alts.end());
    double sup = 0.0;
    const double n = static_cast<double>(alts.size());
    for (std::size_t i = 0; i < alts.size();) {
      std::size_t j = i;
      while (j < alts.size() && alts[j] == alts[i]) ++j;  // tie block [i, j)
      const double f = alt_cdf(alt, alts[i]);
      const double f_left = alt_cdf(alt, std::nextafter(alts[i], 0.0));
      sup = std::max({sup, std::abs(f - j / n), std::abs(f_left - i / n)});
      i = j;
    }
    EXPECT_LE(sup, 0.02) << alt_label(alt);
  }
}

TEST(SampleScenario, NullsAreUniform) {
  const ScenarioConfig cfg{20000, 0, DiracAlt{0.0}, 6};
  const auto s = sample_scenario(cfg, 4);
  std::vector<double> v(s.values().begin(), s.values().end());
  std::sort(v.begin(), v.end());
  double sup = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sup = std::max(sup, std::abs(v[i] - (i + 0.5) / v.size()));
  }
  EXPECT_LE(sup, 0.02);
}

TEST(DuLimit, Examples) {
  EXPECT_DOUBLE_EQ(du_limit_p_v0(0.1, 0), 0.9);
  // 0.9 * e^{-0.5} = 0.5458776
  EXPECT_NEAR(du_limit_p_v0(0.1, 5), 0.5458776, 1e-7);
  EXPECT_NEAR(du_limit_p_v0(1e-9, 5), 1.0, 1e-8);
  EXPECT_THROW(du_limit_p_v0(0.0, 5), std::domain_error);
}

TEST(SufficiencyMargin, Examples) {
  const ScenarioConfig du{1000, 100, DiracAlt{0.0}, 1};
  const double k = 3.0, c0 = 0.05, alpha = 0.1;
  const double t = 0.1 * (k + 2.0);
  EXPECT_NEAR(sufficiency_margin(du, alpha, c0, t), 1.0 / (k + 2.0) - c0 / alpha + 0.9, 1e-12);

  const ScenarioConfig uni{1000, 300, UniformAlt{0.5}, 1};
  EXPECT_NEAR(sufficiency_margin(uni, alpha, c0, 0.1), sufficiency_margin(uni, alpha, c0, 0.4), 1e-12);

  // m0 = m1, x0 = 1/6, alpha = 1/2: (1/2)(1/(1/6)) - (c0/alpha - 1/2) > 0 for small c0
  const ScenarioConfig ex{1000, 500, MinUniformAlt{1.0 / 6.0}, 1};
  EXPECT_GT(sufficiency_margin(ex, 0.5, 0.1, 1.0 / 6.0), 0.0);
  EXPECT_THROW(sufficiency_margin(ex, 0.5, 0.1, 0.0), std::domain_error);
}
