#include "fdplab/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fdplab/rng.hpp"

namespace fdplab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double pwl_cdf(const PiecewiseLinearAlt& alt, double t) {
  const auto& k = alt.knots;
  if (t >= 1.0) {
    return 1.0;
  }
  // last knot with x <= t gives the right-continuous value at jump points
  double value = 0.0;
  for (std::size_t j = 0; j < k.size(); ++j) {
    if (k[j].first <= t) {
      value = k[j].second;
      if (j + 1 < k.size() && k[j + 1].first > t) {
        const double x0 = k[j].first, x1 = k[j + 1].first;
        const double y0 = k[j].second, y1 = k[j + 1].second;
        value = y0 + (t - x0) * (y1 - y0) / (x1 - x0);
        break;
      }
    }
  }
  return value;
}

double pwl_quantile(const PiecewiseLinearAlt& alt, double u) {
  const auto& k = alt.knots;
  if (u <= k.front().second) {
    return k.front().first;
  }
  for (std::size_t j = 0; j + 1 < k.size(); ++j) {
    const double y0 = k[j].second, y1 = k[j + 1].second;
    if (y0 < u && u <= y1) {
      const double x0 = k[j].first, x1 = k[j + 1].first;
      if (x1 == x0) {
        return x0;
      }
      return std::min(x0 + (u - y0) * (x1 - x0) / (y1 - y0), x1);
    }
  }
  return k.back().first;
}

}  // namespace

void validate_alt(const AltModel& alt) {
  std::visit(overloaded{
                 [](const DiracAlt& a) {
                   if (!(a.c >= 0.0 && a.c <= 1.0)) throw std::invalid_argument("Dirac alternative: c must lie in [0,1]");
                 },
                 [](const UniformAlt& a) {
                   if (!(a.upper > 0.0 && a.upper <= 1.0))
                     throw std::invalid_argument("Uniform alternative: upper bound must lie in (0,1]");
                 },
                 [](const MinUniformAlt& a) {
                   if (!(a.cap >= 0.0 && a.cap <= 1.0))
                     throw std::invalid_argument("MinUniform alternative: cap must lie in [0,1]");
                 },
                 [](const PiecewiseLinearAlt& a) {
                   const auto& k = a.knots;
                   if (k.size() < 2 || k.front().first != 0.0 || k.back().first != 1.0 || k.back().second != 1.0) {
                     throw std::invalid_argument("piecewise-linear alternative: knots must run from x=0 to x=1 with F(1)=1");
                   }
                   for (std::size_t j = 0; j < k.size(); ++j) {
                     if (!(k[j].second >= 0.0 && k[j].second <= 1.0)) {
                       throw std::invalid_argument("piecewise-linear alternative: F values must lie in [0,1]");
                     }
                     if (j > 0 && (k[j].first < k[j - 1].first || k[j].second < k[j - 1].second)) {
                       throw std::invalid_argument("piecewise-linear alternative: knots must be nondecreasing");
                     }
                   }
                 },
             },
             alt);
}

std::string alt_label(const AltModel& alt) {
  std::ostringstream out;
  std::visit(overloaded{
                 [&](const DiracAlt& a) { out << "Dirac(" << a.c << ")"; },
                 [&](const UniformAlt& a) { out << "Uniform(0," << a.upper << ")"; },
                 [&](const MinUniformAlt& a) { out << "MinUniform(" << a.cap << ")"; },
                 [&](const PiecewiseLinearAlt& a) { out << "PiecewiseLinear(" << a.knots.size() << " knots)"; },
             },
             alt);
  return out.str();
}

double alt_cdf(const AltModel& alt, double t) {
  if (t < 0.0) {
    return 0.0;
  }
  return std::visit(overloaded{
                        [&](const DiracAlt& a) { return t >= a.c ? 1.0 : 0.0; },
                        [&](const UniformAlt& a) { return std::min(t / a.upper, 1.0); },
                        [&](const MinUniformAlt& a) { return t >= a.cap ? 1.0 : std::min(t, 1.0); },
                        [&](const PiecewiseLinearAlt& a) { return pwl_cdf(a, t); },
                    },
                    alt);
}

double alt_quantile(const AltModel& alt, double u) {
  return std::visit(overloaded{
                        [&](const DiracAlt& a) { return a.c; },
                        [&](const UniformAlt& a) { return a.upper * u; },
                        [&](const MinUniformAlt& a) { return std::min(u, a.cap); },
                        [&](const PiecewiseLinearAlt& a) { return pwl_quantile(a, u); },
                    },
                    alt);
}

bool alt_below(const AltModel& alt, double lambda) { return alt_cdf(alt, lambda) >= 1.0; }

void validate_scenario(const ScenarioConfig& config) {
  if (config.m == 0 || config.m1 >= config.m) {
    throw std::invalid_argument("scenario: need 0 <= m1 < m");
  }
  validate_alt(config.alt);
}

void fill_scenario(const ScenarioConfig& config, std::uint64_t replicate, std::span<double> out) {
  if (out.size() != config.m) {
    throw std::invalid_argument("fill_scenario: output buffer has the wrong size");
  }
  const CounterStream stream(config.seed, replicate);
  const std::size_t m0 = config.m0();
  for (std::size_t i = 0; i < m0; ++i) {
    out[i] = stream.uniform(i);
  }
  if (const auto* dirac = std::get_if<DiracAlt>(&config.alt)) {
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(m0), out.end(), dirac->c);
    return;
  }
  for (std::size_t i = m0; i < config.m; ++i) {
    out[i] = alt_quantile(config.alt, stream.uniform(i));
  }
}

PValueSample sample_scenario(const ScenarioConfig& config, std::uint64_t replicate) {
  validate_scenario(config);
  std::vector<double> values(config.m);
  fill_scenario(config, replicate, values);
  return PValueSample::nulls_first(std::move(values), config.m0());
}

double du_limit_p_v0(double alpha, std::size_t m1) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("du_limit_p_v0: alpha must lie in (0,1)");
  }
  return (1.0 - alpha) * std::exp(-static_cast<double>(m1) * alpha);
}

double sufficiency_margin(const ScenarioConfig& config, double alpha, double c0, double t) {
  if (!(t > 0.0)) {
    throw std::domain_error("sufficiency_margin: t must be positive");
  }
  const double m = static_cast<double>(config.m);
  const double share1 = static_cast<double>(config.m1) / m;
  const double share0 = static_cast<double>(config.m0()) / m;
  return share1 * alt_cdf(config.alt, t) / t - (c0 / alpha - share0);
}

}  // namespace fdplab
