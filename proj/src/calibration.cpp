#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fdplab/rng.hpp"
#include "fdplab/simulation.hpp"

namespace fdplab {

namespace {

// Largest admissible a: 1 - alpha itself is only allowed for b > 0.
double upper_a(double alpha, double b) {
  const double cap = 1.0 - alpha;
  if (b > 0.0) return std::min(b, cap);
  return std::nextafter(cap, 0.0);
}

}  // namespace

std::vector<std::size_t> default_m1_grid(std::size_t m) {
  if (m < 2) throw std::invalid_argument("default_m1_grid: need m >= 2");
  const auto ceil_div = [m](std::size_t d) { return (m + d - 1) / d; };
  std::vector<std::size_t> grid{1, ceil_div(10), ceil_div(4), ceil_div(2), m - 1};
  for (auto& g : grid) g = std::clamp<std::size_t>(g, 1, m - 1);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

CalibrationStep aorc_objective(const CalibrationConfig& config, double a, std::uint64_t seed,
                               const RunOptions& options) {
  const ProcedureSpec spec = ProcedureSpec::quotient(config.alpha, a, config.b);
  const auto grid = config.m1_grid.empty() ? default_m1_grid(config.m) : config.m1_grid;
  RunOptions opts = options;
  opts.leave_depth = 0;
  CalibrationStep step;
  step.a = a;
  step.objective = -1.0;
  for (std::size_t m1 : grid) {
    // same seed for every a: the null draws are shared (common random numbers)
    const McSummary s = run_mc({config.m, m1, DiracAlt{0.0}, seed}, spec, config.replicates, opts);
    const McEstimate fdr = s.mean(Channel::fdp);
    if (fdr.mean > step.objective) {
      step.objective = fdr.mean;
      step.se = fdr.se;
      step.worst_m1 = m1;
    }
  }
  return step;
}

CalibrationResult calibrate_aorc_a(const CalibrationConfig& config, const RunOptions& options) {
  if (!(config.b > 0.0)) throw std::invalid_argument("calibrate_aorc_a: b must be positive");
  if (!(config.tolerance > 0.0)) throw std::invalid_argument("calibrate_aorc_a: tolerance must be positive");
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw std::invalid_argument("calibrate_aorc_a: alpha in (0,1)");
  for (std::size_t m1 : config.m1_grid) {
    if (m1 >= config.m) throw std::invalid_argument("calibrate_aorc_a: every m1 must be below m");
  }

  CalibrationResult res;
  double lo = 0.0, hi = upper_a(config.alpha, config.b);
  const CalibrationStep at_zero = aorc_objective(config, lo, config.seed, options);
  res.path.push_back(at_zero);
  if (at_zero.objective > config.alpha) {
    throw std::runtime_error("calibrate_aorc_a: objective at a = 0 already exceeds alpha");
  }
  CalibrationStep best = at_zero;
  const CalibrationStep at_hi = aorc_objective(config, hi, config.seed, options);
  res.path.push_back(at_hi);
  if (at_hi.objective <= config.alpha) {
    best = at_hi;
    lo = hi;
  } else {
    // The half tolerance on the objective leaves room for the re-check with
    // a fresh seed.
    while (hi - lo >= config.tolerance) {
      const double mid = 0.5 * (lo + hi);
      const CalibrationStep step = aorc_objective(config, mid, config.seed, options);
      res.path.push_back(step);
      if (std::abs(step.objective - config.alpha) <= 0.5 * config.tolerance) {
        best = step;
        lo = hi = mid;
        break;
      }
      if (step.objective > config.alpha) {
        hi = mid;
      } else {
        lo = mid;
        best = step;
      }
    }
  }
  res.a_m = best.a;
  res.sup_fdr = best.objective;
  res.sup_fdr_se = best.se;
  res.lo = lo;
  res.hi = hi;

  auto sorted = res.path;
  std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
  res.path_monotone = true;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].objective < sorted[i - 1].objective - 4.0 * std::hypot(sorted[i].se, sorted[i - 1].se)) {
      res.path_monotone = false;
    }
  }

  res.verify_seed = CounterStream::mix(config.seed + 0x5851f42d4c957f2dULL);
  const CalibrationStep check = aorc_objective(config, res.a_m, res.verify_seed, options);
  res.verified_sup_fdr = check.objective;
  res.verified_se = check.se;
  res.within_tolerance = std::abs(check.objective - config.alpha) <= config.tolerance;
  return res;
}

}  // namespace fdplab
