#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fdplab/core.hpp"

namespace fdplab {

enum class EstimatorKind { trivial, storey, interval_combination };

/// How the convex weights of an interval combination are produced.
enum class WeightRule {
  deterministic,  ///< fixed user-supplied weights
  nested_tail,    ///< data-driven, weight i depends on the ecdf on [lambda_i, 1] only
};

/// An m0 estimator. Storey and the interval combinations read lambda from the
/// TailView they are evaluated on; a combination grid must start at that lambda.
class EstimatorSpec {
public:
  static EstimatorSpec trivial();
  static EstimatorSpec storey();
  /// grid = (lambda_0 < ... < lambda_k = 1), weights beta_1..beta_k.
  static EstimatorSpec combination(std::vector<double> grid, std::vector<double> weights);
  static EstimatorSpec nested_tail(std::vector<double> grid);

  EstimatorKind kind() const noexcept { return kind_; }
  WeightRule weight_rule() const noexcept { return rule_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::string label() const;

private:
  EstimatorKind kind_ = EstimatorKind::trivial;
  WeightRule rule_ = WeightRule::deterministic;
  std::vector<double> grid_;
  std::vector<double> weights_;
};

struct EstimateRecord {
  double raw = 0.0;      // estimate before the floor
  double floored = 0.0;  // max(raw, (alpha/lambda) R(lambda))
  bool floor_active = false;
};

/// m (1 - F(lambda) + 1/m) / (1 - lambda)
double storey_estimate(const TailView& view);

/// m (F(hi) - F(lo) + 1/m) / (hi - lo), lambda <= lo < hi <= 1.
double interval_estimate(const TailView& view, double lo, double hi);

/// Evaluated weights beta_1..beta_k for a combination estimator; validated
/// for nonnegativity, unit sum and, for the nested rule, the ordering
/// beta_i / (lambda_i - lambda_{i-1}) nondecreasing.
std::vector<double> combination_weights(const EstimatorSpec& spec, const TailView& view);

/// sum_i beta_i * interval_estimate(view, lambda_{i-1}, lambda_i)
double combined_estimate(const EstimatorSpec& spec, const TailView& view);

/// Dispatches on the estimator kind; the value before flooring.
double raw_estimate(const EstimatorSpec& spec, const TailView& view);

EstimateRecord apply_floor(double raw, const TailView& view, double alpha);

/// True iff beta_i / (lambda_i - lambda_{i-1}) is nondecreasing in i
/// (relative slack 1e-12).
bool weights_ordered(std::span<const double> grid, std::span<const double> weights);

/// Empirical check that the estimator is coordinatewise nondecreasing in the
/// p-values: `trials` random single-coordinate increases of `sample`, each
/// compared against the unperturbed estimate. lambda is the evaluation point
/// of the TailView (the grid start for combinations).
bool monotonicity_probe(const EstimatorSpec& spec, const PValueSample& sample, double lambda,
                        std::size_t trials, std::uint64_t seed);

/// A constant K with m0_hat <= K m for every input.
double a3_constant(const EstimatorSpec& spec, double lambda);

}  // namespace fdplab
