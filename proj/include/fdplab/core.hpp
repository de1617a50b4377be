#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fdplab {

/// A realized vector of m p-values together with the oracle labels
/// (true null / false null). Labels are only consumed by oracle quantities
/// such as V and the leave-j-out constructions; estimators never see them.
class PValueSample {
public:
  PValueSample(std::vector<double> values, std::vector<bool> is_null);

  /// Convenience: the first m0 entries are true nulls, the rest alternatives.
  static PValueSample nulls_first(std::vector<double> values, std::size_t m0);

  std::size_t m() const noexcept { return values_.size(); }
  std::size_t m0() const noexcept { return m0_; }
  std::size_t m1() const noexcept { return values_.size() - m0_; }

  std::span<const double> values() const noexcept { return values_; }
  const std::vector<bool>& is_null() const noexcept { return is_null_; }
  double value(std::size_t i) const { return values_.at(i); }
  bool null_at(std::size_t i) const { return is_null_.at(i); }

private:
  std::vector<double> values_;
  std::vector<bool> is_null_;
  std::size_t m0_ = 0;
};

/// Nondecreasing critical values 0 < a_1 <= ... <= a_m < 1 (index 0 here is
/// the critical value for one rejection).
class CriticalValues {
public:
  CriticalValues(std::vector<double> alphas, std::string provenance);

  std::size_t size() const noexcept { return alphas_.size(); }
  /// Critical value for `count` rejections, 1 <= count <= m.
  double at_count(std::size_t count) const { return alphas_.at(count - 1); }
  std::span<const double> values() const noexcept { return alphas_; }
  const std::string& provenance() const noexcept { return provenance_; }

private:
  std::vector<double> alphas_;
  std::string provenance_;
};

struct StepUpOutcome {
  std::size_t r = 0;
  std::size_t v = 0;
  std::vector<std::size_t> rejected;  // original indices, ascending
  std::optional<double> m0_hat;       // only for adaptive procedures
  double threshold = 0.0;             // critical value at R, 0 when R = 0

  double fdp() const noexcept { return r == 0 ? 0.0 : static_cast<double>(v) / static_cast<double>(r); }
};

/// The part of the data an m0 estimator is allowed to look at: R_m(lambda)
/// and the p-values in the estimation region (lambda, 1]. It determines the
/// empirical distribution function on [lambda, 1] and nothing else.
class TailView {
public:
  TailView(std::size_t m, double lambda, std::size_t r_lambda, std::vector<double> tail_values);

  std::size_t m() const noexcept { return m_; }
  double lambda() const noexcept { return lambda_; }
  std::size_t r_lambda() const noexcept { return r_lambda_; }
  std::span<const double> tail_values() const noexcept { return tail_; }

  /// Number of p-values <= t, for t >= lambda.
  std::size_t count_at_most(double t) const;
  /// Empirical distribution function at t >= lambda.
  double ecdf(double t) const;

private:
  std::size_t m_;
  double lambda_;
  std::size_t r_lambda_;
  std::vector<double> tail_;
};

/// Stable ascending order of the p-values (ties keep original index order).
std::vector<std::size_t> sort_pvalues(const PValueSample& sample);

/// R = max{ i : p_(i) <= alpha_i }, 0 when no such i.
std::size_t step_up_count(std::span<const double> sorted_pvalues, const CriticalValues& critical);

/// V = #{ true nulls with p <= alpha_R } (0 when R = 0).
std::size_t false_rejection_count(const PValueSample& sample, std::span<const std::size_t> order,
                                  std::size_t r, const CriticalValues& critical);

/// Splits the sample at lambda; labels are dropped.
TailView tail_view(const PValueSample& sample, double lambda);

/// Same as above, also enforcing alpha <= lambda < 1.
TailView tail_view(const PValueSample& sample, double lambda, double alpha);

inline double fdp(std::size_t v, std::size_t r) noexcept {
  return r == 0 ? 0.0 : static_cast<double>(v) / static_cast<double>(r);
}

}  // namespace fdplab
