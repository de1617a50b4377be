#include "fdplab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fdplab/rng.hpp"

namespace fdplab {

namespace {

constexpr double kWeightSumTolerance = 1e-12;

void validate_grid(const std::vector<double>& grid) {
  if (grid.size() < 2) {
    throw std::invalid_argument("estimator grid needs at least lambda_0 and lambda_k = 1");
  }
  if (!(grid.front() > 0.0) || grid.back() != 1.0) {
    throw std::invalid_argument("estimator grid must start in (0,1) and end at 1");
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw std::invalid_argument("estimator grid must be strictly increasing");
    }
  }
}

void validate_weights(const std::vector<double>& weights, std::size_t k) {
  if (weights.size() != k) {
    throw std::invalid_argument("estimator weights: need one weight per grid interval");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) {
      throw std::invalid_argument("estimator weights must be nonnegative");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    throw std::invalid_argument("estimator weights must sum to 1");
  }
}

// Data-driven weights built from the top interval down. With rho_i the
// weight density beta_i / (lambda_i - lambda_{i-1}) and M_i the mass still
// to distribute over intervals 1..i, rho_i is kept inside
//   [ M_i / (lambda_i - lambda_0), min(rho_{i+1}, M_i / (lambda_i - lambda_{i-1})) ]
// which keeps the densities ordered and the remaining mass feasible. The
// position inside the interval is the Storey null-proportion estimate at
// lambda_i, so beta_i only reads the ecdf on [lambda_i, 1]. rho_k and hence
// beta_k are constant; beta_1 takes whatever mass is left.
std::vector<double> nested_tail_weights(const std::vector<double>& grid, const TailView& view) {
  const std::size_t k = grid.size() - 1;
  std::vector<double> beta(k, 0.0);
  if (k == 1) {
    beta[0] = 1.0;
    return beta;
  }
  const double lambda0 = grid.front();
  const double top_width = grid[k] - grid[k - 1];
  double rho = 0.5 * (1.0 / (1.0 - lambda0) + 1.0 / top_width);
  beta[k - 1] = rho * top_width;
  double remaining = 1.0 - beta[k - 1];
  for (std::size_t i = k - 1; i >= 2; --i) {
    const double width = grid[i] - grid[i - 1];
    const double lo = remaining / (grid[i] - lambda0);
    const double hi = std::min(rho, remaining / width);
    const double pi0 = std::clamp((1.0 - view.ecdf(grid[i])) / (1.0 - grid[i]), 0.0, 1.0);
    rho = lo + pi0 * (hi - lo);
    beta[i - 1] = rho * width;
    remaining -= beta[i - 1];
  }
  beta[0] = std::max(remaining, 0.0);
  return beta;
}

}  // namespace

EstimatorSpec EstimatorSpec::trivial() { return EstimatorSpec{}; }

EstimatorSpec EstimatorSpec::storey() {
  EstimatorSpec spec;
  spec.kind_ = EstimatorKind::storey;
  return spec;
}

EstimatorSpec EstimatorSpec::combination(std::vector<double> grid, std::vector<double> weights) {
  validate_grid(grid);
  validate_weights(weights, grid.size() - 1);
  EstimatorSpec spec;
  spec.kind_ = EstimatorKind::interval_combination;
  spec.rule_ = WeightRule::deterministic;
  spec.grid_ = std::move(grid);
  spec.weights_ = std::move(weights);
  return spec;
}

EstimatorSpec EstimatorSpec::nested_tail(std::vector<double> grid) {
  validate_grid(grid);
  EstimatorSpec spec;
  spec.kind_ = EstimatorKind::interval_combination;
  spec.rule_ = WeightRule::nested_tail;
  spec.grid_ = std::move(grid);
  return spec;
}

std::string EstimatorSpec::label() const {
  switch (kind_) {
    case EstimatorKind::trivial:
      return "trivial";
    case EstimatorKind::storey:
      return "storey";
    case EstimatorKind::interval_combination: {
      std::ostringstream out;
      out << (rule_ == WeightRule::nested_tail ? "nested_tail" : "combination") << "(";
      for (std::size_t i = 0; i < grid_.size(); ++i) {
        out << (i ? "," : "") << grid_[i];
      }
      if (rule_ == WeightRule::deterministic) {
        out << ";";
        for (std::size_t i = 0; i < weights_.size(); ++i) {
          out << (i ? "," : "") << weights_[i];
        }
      }
      out << ")";
      return out.str();
    }
  }
  return "unknown";
}

double storey_estimate(const TailView& view) {
  // m (1 - F(lambda) + 1/m) = (m - R(lambda)) + 1
  const double above = static_cast<double>(view.m() - view.r_lambda());
  return (above + 1.0) / (1.0 - view.lambda());
}

double interval_estimate(const TailView& view, double lo, double hi) {
  if (!(lo >= view.lambda() && lo < hi && hi <= 1.0)) {
    throw std::domain_error("interval_estimate: interval must satisfy lambda <= lo < hi <= 1");
  }
  const double in_interval =
      static_cast<double>(view.count_at_most(hi)) - static_cast<double>(view.count_at_most(lo));
  return (in_interval + 1.0) / (hi - lo);
}

bool weights_ordered(std::span<const double> grid, std::span<const double> weights) {
  if (grid.size() != weights.size() + 1) {
    return false;
  }
  double prev = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double density = weights[i] / (grid[i + 1] - grid[i]);
    if (density < prev * (1.0 - 1e-12) - 1e-15) {
      return false;
    }
    prev = density;
  }
  return true;
}

std::vector<double> combination_weights(const EstimatorSpec& spec, const TailView& view) {
  if (spec.kind() != EstimatorKind::interval_combination) {
    throw std::invalid_argument("combination_weights: not an interval combination");
  }
  const auto& grid = spec.grid();
  if (grid.front() != view.lambda()) {
    throw std::invalid_argument("combination_weights: grid must start at the view's lambda");
  }
  std::vector<double> beta =
      spec.weight_rule() == WeightRule::nested_tail ? nested_tail_weights(grid, view) : spec.weights();
  double sum = 0.0;
  for (double b : beta) {
    if (!(b >= 0.0)) {
      throw std::logic_error("combination weights: negative weight after evaluation");
    }
    sum += b;
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    throw std::logic_error("combination weights: weights do not sum to 1 after evaluation");
  }
  if (spec.weight_rule() == WeightRule::nested_tail && !weights_ordered(grid, beta)) {
    throw std::logic_error("combination weights: ordering of weight densities violated");
  }
  return beta;
}

double combined_estimate(const EstimatorSpec& spec, const TailView& view) {
  const auto beta = combination_weights(spec, view);
  const auto& grid = spec.grid();
  double total = 0.0;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (beta[i] > 0.0) {
      total += beta[i] * interval_estimate(view, grid[i], grid[i + 1]);
    }
  }
  return total;
}

double raw_estimate(const EstimatorSpec& spec, const TailView& view) {
  switch (spec.kind()) {
    case EstimatorKind::trivial:
      return static_cast<double>(view.m());
    case EstimatorKind::storey:
      return storey_estimate(view);
    case EstimatorKind::interval_combination:
      return combined_estimate(spec, view);
  }
  throw std::logic_error("raw_estimate: unknown estimator kind");
}

EstimateRecord apply_floor(double raw, const TailView& view, double alpha) {
  if (!(raw > 0.0)) {
    throw std::domain_error("apply_floor: raw estimate must be positive");
  }
  const double floor = alpha / view.lambda() * static_cast<double>(view.r_lambda());
  EstimateRecord rec;
  rec.raw = raw;
  rec.floor_active = floor > raw;
  rec.floored = rec.floor_active ? floor : raw;
  return rec;
}

bool monotonicity_probe(const EstimatorSpec& spec, const PValueSample& sample, double lambda,
                        std::size_t trials, std::uint64_t seed) {
  const double base = raw_estimate(spec, tail_view(sample, lambda));
  const CounterStream stream(seed, 0);
  std::vector<double> values(sample.values().begin(), sample.values().end());
  for (std::size_t t = 0; t < trials; ++t) {
    const auto j = static_cast<std::size_t>(stream.bits(2 * t) % sample.m());
    const double old = values[j];
    const double raised = old + (1.0 - old) * stream.uniform(2 * t + 1);
    values[j] = std::min(raised, 1.0);
    const PValueSample perturbed(values, sample.is_null());
    const double after = raw_estimate(spec, tail_view(perturbed, lambda));
    values[j] = old;
    if (after < base) {
      return false;
    }
  }
  return true;
}

double a3_constant(const EstimatorSpec& spec, double lambda) {
  switch (spec.kind()) {
    case EstimatorKind::trivial:
      return 1.0;
    case EstimatorKind::storey:
      return 2.0 / (1.0 - lambda);
    case EstimatorKind::interval_combination: {
      double sum = 0.0;
      const auto& grid = spec.grid();
      for (std::size_t i = 1; i < grid.size(); ++i) {
        sum += 1.0 / (grid[i] - grid[i - 1]);
      }
      return 2.0 * sum;
    }
  }
  return 1.0;
}

}  // namespace fdplab
