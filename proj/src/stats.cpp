#include "fdplab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fdplab {

void MomentAccumulator::push(double x) noexcept {
  const double n1 = static_cast<double>(n_);
  ++n_;
  const double n = static_cast<double>(n_);
  const double delta = x - mean_;
  const double delta_n = delta / n;
  const double delta_n2 = delta_n * delta_n;
  const double term1 = delta * delta_n * n1;
  mean_ += delta_n;
  m4_ += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * m2_ - 4.0 * delta_n * m3_;
  m3_ += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * m2_;
  m2_ += term1;
}

void MomentAccumulator::merge(const MomentAccumulator& other) noexcept {
  if (other.n_ == 0) {
    return;
  }
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  const double d2 = delta * delta;
  const double d3 = d2 * delta;
  const double d4 = d2 * d2;

  const double m2 = m2_ + other.m2_ + d2 * na * nb / n;
  const double m3 = m3_ + other.m3_ + d3 * na * nb * (na - nb) / (n * n) +
                    3.0 * delta * (na * other.m2_ - nb * m2_) / n;
  const double m4 = m4_ + other.m4_ + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                    6.0 * d2 * (na * na * other.m2_ + nb * nb * m2_) / (n * n) +
                    4.0 * delta * (na * other.m3_ - nb * m3_) / n;

  mean_ = (na * mean_ + nb * other.mean_) / n;
  m2_ = m2;
  m3_ = m3;
  m4_ = m4;
  n_ += other.n_;
}

double MomentAccumulator::sample_variance() const noexcept {
  if (n_ < 2) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return std::max(m2_, 0.0) / static_cast<double>(n_ - 1);
}

double MomentAccumulator::central_moment4() const noexcept {
  return n_ == 0 ? std::numeric_limits<double>::quiet_NaN() : m4_ / static_cast<double>(n_);
}

McEstimate MomentAccumulator::mean_estimate() const noexcept {
  McEstimate est;
  est.n = n_;
  est.mean = mean_;
  est.variance = sample_variance();
  est.se = std::sqrt(est.variance / static_cast<double>(n_));
  return est;
}

McEstimate MomentAccumulator::variance_estimate() const noexcept {
  McEstimate est;
  est.n = n_;
  est.mean = sample_variance();
  const double n = static_cast<double>(n_);
  const double sigma2 = m2_ / n;
  const double mu4 = m4_ / n;
  // Var(s^2) ~ (mu4 - sigma^4 (n-3)/(n-1)) / n
  const double per_replicate = std::max(mu4 - sigma2 * sigma2 * (n - 3.0) / (n - 1.0), 0.0);
  est.variance = per_replicate;
  est.se = std::sqrt(per_replicate / n);
  return est;
}

}  // namespace fdplab
