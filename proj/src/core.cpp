#include "fdplab/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fdplab {

PValueSample::PValueSample(std::vector<double> values, std::vector<bool> is_null)
    : values_(std::move(values)), is_null_(std::move(is_null)) {
  if (values_.size() != is_null_.size()) {
    throw std::invalid_argument("PValueSample: values and labels differ in length");
  }
  for (double p : values_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("PValueSample: p-value outside [0,1]");
    }
  }
  m0_ = static_cast<std::size_t>(std::count(is_null_.begin(), is_null_.end(), true));
  if (m0_ == 0) {
    throw std::invalid_argument("PValueSample: at least one true null is required");
  }
}

PValueSample PValueSample::nulls_first(std::vector<double> values, std::size_t m0) {
  if (m0 > values.size()) {
    throw std::invalid_argument("PValueSample: m0 exceeds m");
  }
  std::vector<bool> labels(values.size(), false);
  std::fill_n(labels.begin(), m0, true);
  return PValueSample(std::move(values), std::move(labels));
}

CriticalValues::CriticalValues(std::vector<double> alphas, std::string provenance)
    : alphas_(std::move(alphas)), provenance_(std::move(provenance)) {
  if (alphas_.empty()) {
    throw std::invalid_argument("CriticalValues: empty sequence");
  }
  double prev = 0.0;
  for (double a : alphas_) {
    if (!(a > 0.0 && a < 1.0) || a < prev) {
      throw std::invalid_argument("CriticalValues: values must satisfy 0 < a_1 <= ... <= a_m < 1");
    }
    prev = a;
  }
}

TailView::TailView(std::size_t m, double lambda, std::size_t r_lambda, std::vector<double> tail_values)
    : m_(m), lambda_(lambda), r_lambda_(r_lambda), tail_(std::move(tail_values)) {
  if (r_lambda_ + tail_.size() != m_) {
    throw std::invalid_argument("TailView: r_lambda + |tail| must equal m");
  }
  for (double p : tail_) {
    if (!(p > lambda_ && p <= 1.0)) {
      throw std::invalid_argument("TailView: tail value outside (lambda, 1]");
    }
  }
}

std::size_t TailView::count_at_most(double t) const {
  if (t < lambda_) {
    throw std::domain_error("TailView: the empirical distribution is only observable on [lambda, 1]");
  }
  std::size_t above = 0;
  for (double p : tail_) {
    above += (p <= t) ? 1u : 0u;
  }
  return r_lambda_ + above;
}

double TailView::ecdf(double t) const {
  return static_cast<double>(count_at_most(t)) / static_cast<double>(m_);
}

std::vector<std::size_t> sort_pvalues(const PValueSample& sample) {
  std::vector<std::size_t> order(sample.m());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto values = sample.values();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  return order;
}

std::size_t step_up_count(std::span<const double> sorted_pvalues, const CriticalValues& critical) {
  if (sorted_pvalues.size() != critical.size()) {
    throw std::invalid_argument("step_up_count: p-values and critical values differ in length");
  }
  for (std::size_t i = sorted_pvalues.size(); i > 0; --i) {
    if (sorted_pvalues[i - 1] <= critical.at_count(i)) {
      return i;
    }
  }
  return 0;
}

std::size_t false_rejection_count(const PValueSample& sample, std::span<const std::size_t> order,
                                  std::size_t r, const CriticalValues& critical) {
  if (r == 0) {
    return 0;
  }
  if (order.size() != sample.m() || r > sample.m()) {
    throw std::invalid_argument("false_rejection_count: inconsistent permutation or R");
  }
  const double threshold = critical.at_count(r);
  std::size_t v = 0;
  for (std::size_t idx : order) {
    if (sample.value(idx) > threshold) {
      break;
    }
    v += sample.null_at(idx) ? 1u : 0u;
  }
  return v;
}

TailView tail_view(const PValueSample& sample, double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw std::domain_error("tail_view: lambda must lie in (0,1)");
  }
  std::size_t below = 0;
  std::vector<double> tail;
  tail.reserve(sample.m());
  for (double p : sample.values()) {
    if (p <= lambda) {
      ++below;
    } else {
      tail.push_back(p);
    }
  }
  return TailView(sample.m(), lambda, below, std::move(tail));
}

TailView tail_view(const PValueSample& sample, double lambda, double alpha) {
  if (!(lambda >= alpha && lambda < 1.0)) {
    throw std::domain_error("tail_view: lambda must lie in [alpha, 1)");
  }
  return tail_view(sample, lambda);
}

}  // namespace fdplab
