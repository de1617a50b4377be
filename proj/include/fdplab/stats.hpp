#pragma once

#include <cstddef>

namespace fdplab {

/// Monte-Carlo estimate of a scalar with its standard error.
struct McEstimate {
  double mean = 0.0;
  double variance = 0.0;  // per-replicate variance behind `se`
  double se = 0.0;        // sqrt(variance / n)
  std::size_t n = 0;
};

/// Streaming central moments up to order four. Merging is exact in real
/// arithmetic (Pebay's pairwise formulas); the merge order fixes the
/// floating-point result.
class MomentAccumulator {
public:
  void push(double x) noexcept;
  void merge(const MomentAccumulator& other) noexcept;

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance.
  double sample_variance() const noexcept;
  double central_moment4() const noexcept;

  /// Estimate of the expectation.
  McEstimate mean_estimate() const noexcept;
  /// Estimate of the variance; its standard error comes from the delta
  /// method with the fourth central moment.
  McEstimate variance_estimate() const noexcept;

private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double m4_ = 0.0;
};

}  // namespace fdplab
