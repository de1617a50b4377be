#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fdplab/core.hpp"
#include "fdplab/procedures.hpp"
#include "fdplab/stats.hpp"

namespace fdplab {

/// Largest moment order with exact coefficients.
inline constexpr std::size_t kMaxMomentOrder = 20;
/// Deepest leave-j-out count the replicate engine tracks.
inline constexpr std::size_t kMaxLeaveDepth = 4;

/// Sets the min(j, V(lambda)) smallest-indexed true nulls with p <= lambda
/// to 0. Labels are kept.
PValueSample leave_j_out(const PValueSample& sample, std::size_t j, double lambda);

/// R of the procedure on leave_j_out(sample, j, split point); the split
/// point is lambda for adaptive procedures and 1 otherwise.
std::size_t r_leave_j(const ProcedureSpec& spec, const PValueSample& sample, std::size_t j);

/// (1/j!) sum_{r<j} (-1)^r binom(j,r) (j-r)^k: surjections {1..k} -> {1..j}
/// divided by j!. Requires 1 <= j <= k <= kMaxMomentOrder.
std::uint64_t c_coefficient(std::size_t j, std::size_t k);

/// One replicate's left side (the moment's statistic) and right side (the
/// integrand of the exact formula with the conditional expectation
/// collapsed by the tower property).
struct PairedStatistics {
  double lhs = 0.0;
  double rhs = 0.0;
  std::size_t k = 1;
  std::size_t replicate = 0;
};

/// sum_j (alpha/lambda)^j C_{j,k} V(l)(V(l)-1)...(V(l)-j+1) / m0_hat^j * R_j^(j-k)
/// where r_leave[j] = R^{(j,lambda)} (r_leave[0] unused).
double adaptive_moment_rhs(double alpha, double lambda, std::size_t v_lambda, double m0_hat,
                           std::span<const std::size_t> r_leave, std::size_t k);

/// sum_j C_{j,k} m0(m0-1)...(m0-j+1) * crit_at[j]^j / R_j^k with
/// crit_at[j] = alpha_{R_j:m}, for deterministic critical values.
double deterministic_moment_rhs(std::size_t m0, std::span<const std::size_t> r_leave,
                                std::span<const double> crit_at, std::size_t k);

PairedStatistics paired_moment_k(const ProcedureSpec& spec, const PValueSample& sample, std::size_t k);
PairedStatistics paired_fdr(const ProcedureSpec& spec, const PValueSample& sample);
PairedStatistics paired_ev(const ProcedureSpec& spec, const PValueSample& sample);
PairedStatistics deterministic_moment_pair(const ProcedureSpec& spec, const PValueSample& sample,
                                           std::size_t k);

/// Everything one replicate contributes to the Monte-Carlo aggregates.
struct ReplicateRecord {
  std::size_t m = 0;
  std::size_t m0 = 0;
  std::size_t r = 0;
  std::size_t v = 0;
  std::size_t r_lambda = 0;
  std::size_t v_lambda = 0;
  double m0_hat = 0.0;  // m for deterministic procedures
  double threshold = 0.0;
  std::size_t leave_depth = 0;
  std::array<std::size_t, kMaxLeaveDepth + 1> r_leave{};  // [0] = R
  std::array<double, kMaxLeaveDepth + 1> crit_at{};       // alpha_{R_j:m}, 0 if R_j = 0
};

/// Evaluates a procedure and its leave-j-out counts on one p-value vector
/// with reusable buffers. Only p-values below the largest critical value are
/// sorted, and the leave-j-out vectors are never materialized.
class ReplicateEvaluator {
public:
  ReplicateEvaluator(ProcedureSpec spec, std::size_t leave_depth);

  const ProcedureSpec& spec() const noexcept { return spec_; }
  std::size_t leave_depth() const noexcept { return depth_; }

  ReplicateRecord evaluate(const PValueSample& sample);
  /// Indices [0, m0) are the true nulls.
  ReplicateRecord evaluate_nulls_first(std::span<const double> values, std::size_t m0);

private:
  template <class IsNull>
  ReplicateRecord run(std::span<const double> values, std::size_t m0, IsNull is_null);
  double critical(std::size_t count) const noexcept;

  struct Candidate {
    double p;
    std::size_t index;
    bool null;
  };

  ProcedureSpec spec_;
  std::size_t depth_;
  std::size_t m_ = 0;
  double m0_hat_ = 0.0;
  std::vector<double> tail_;
  std::vector<Candidate> candidates_;
  std::vector<std::size_t> zero_set_;
};

struct BoundInputs {
  McEstimate var_fdp;        // Var(V/R)
  McEstimate leading;        // E( V(l)/m0_hat * 1/R^{(1,l)} )
  McEstimate var_ratio;      // Var( V(l)/m0_hat )
  McEstimate ratio_over_m0;  // E( V(l)/m0_hat^2 )
  std::size_t m = 0;
};

struct BoundReport {
  McEstimate c_m_lambda;
  McEstimate var_fdp;
  double slack_term = 0.0;  // 2 / (lambda (m0 + 1))
  McEstimate d_m_lambda;
  double hoeffding = 0.0;
  McEstimate ratio_over_m0;
  double ratio_bound = 0.0;  // (lambda/alpha)^2 * slack_term
  double combined_se = 0.0;  // sqrt(se(C)^2 + se(Var)^2)

  // Inequalities as stated: C <= Var <= C + slack, and E(V(l)/m0_hat^2) <= bound.
  bool stated_lower_holds = false;
  bool stated_upper_holds = false;
  bool ratio_bound_holds = false;
  // Direction implied by the exact variance identity: C - slack <= Var <= C.
  bool identity_lower_holds = false;
  bool identity_upper_holds = false;
};

/// lambda m0 K_m / (alpha exp(m0 lambda / 8))
double hoeffding_term(double lambda, std::size_t m0, double k_m, double alpha);

/// Plugs the Monte-Carlo estimates into the variance sandwich and D_{m,lambda}.
/// Every comparison allows `z` standard errors.
BoundReport variance_bounds(const BoundInputs& estimates, std::size_t m0, double lambda, double alpha, double k,
                         double z = 4.0);

}  // namespace fdplab
