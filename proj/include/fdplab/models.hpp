#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fdplab/core.hpp"

namespace fdplab {

/// Point mass at c; Dirac(0) is the Dirac-uniform configuration.
struct DiracAlt {
  double c = 0.0;
};

/// Uniform on [0, upper].
struct UniformAlt {
  double upper = 1.0;
};

/// p = min(U, cap) with U uniform on [0,1].
struct MinUniformAlt {
  double cap = 1.0;
};

/// Linear interpolation between knots (x, F(x)); repeated x encode jumps.
/// Knots run from x = 0 to x = 1 with F(1) = 1.
struct PiecewiseLinearAlt {
  std::vector<std::pair<double, double>> knots;
};

using AltModel = std::variant<DiracAlt, UniformAlt, MinUniformAlt, PiecewiseLinearAlt>;

void validate_alt(const AltModel& alt);
std::string alt_label(const AltModel& alt);

/// Distribution function of a false-null p-value, right-continuous.
double alt_cdf(const AltModel& alt, double t);

/// Generalized inverse inf{ t : F(t) >= u }.
double alt_quantile(const AltModel& alt, double u);

/// True when every alternative p-value is <= lambda almost surely.
bool alt_below(const AltModel& alt, double lambda);

struct ScenarioConfig {
  std::size_t m = 0;
  std::size_t m1 = 0;
  AltModel alt = DiracAlt{0.0};
  std::uint64_t seed = 0;

  std::size_t m0() const noexcept { return m - m1; }
};

void validate_scenario(const ScenarioConfig& config);

/// Writes the replicate's p-values into `out` (size m): indices [0, m0) are
/// the true nulls, [m0, m) the alternatives.
void fill_scenario(const ScenarioConfig& config, std::uint64_t replicate, std::span<double> out);

PValueSample sample_scenario(const ScenarioConfig& config, std::uint64_t replicate);

/// Limit of P(V = 0) for BH(alpha) under DU(m, m1) as m grows.
double du_limit_p_v0(double alpha, std::size_t m1);

/// (m1/m) F1(t)/t - (c0/alpha - m0/m): finite-m margin of the sufficient
/// condition for consistency at the point t.
double sufficiency_margin(const ScenarioConfig& config, double alpha, double c0, double t);

}  // namespace fdplab
