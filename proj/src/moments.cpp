#include "fdplab/moments.hpp"

#include <cmath>
#include <stdexcept>

namespace fdplab {

namespace {

__extension__ typedef __int128 wide_int;

std::size_t count_null_below(const PValueSample& sample, double lambda) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < sample.m(); ++i) {
    if (sample.null_at(i) && sample.value(i) <= lambda) {
      ++count;
    }
  }
  return count;
}

double falling(std::size_t n, std::size_t j) {
  double out = 1.0;
  for (std::size_t r = 0; r < j; ++r) {
    if (n < r + 1) {
      return 0.0;
    }
    out *= static_cast<double>(n - r);
  }
  return out;
}

void require_moment_order(std::size_t k, std::size_t limit, const char* who) {
  if (k == 0 || k > limit) {
    throw std::invalid_argument(std::string(who) + ": moment order out of range");
  }
}

}  // namespace

PValueSample leave_j_out(const PValueSample& sample, std::size_t j, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("leave_j_out: lambda must lie in (0,1]");
  }
  std::vector<double> values(sample.values().begin(), sample.values().end());
  std::size_t replaced = 0;
  for (std::size_t i = 0; i < values.size() && replaced < j; ++i) {
    if (sample.null_at(i) && values[i] <= lambda) {
      values[i] = 0.0;
      ++replaced;
    }
  }
  return PValueSample(std::move(values), sample.is_null());
}

std::size_t r_leave_j(const ProcedureSpec& spec, const PValueSample& sample, std::size_t j) {
  if (j == 0) {
    return run_procedure(spec, sample).r;
  }
  return run_procedure(spec, leave_j_out(sample, j, spec.split_point())).r;
}

std::uint64_t c_coefficient(std::size_t j, std::size_t k) {
  if (j == 0 || j > k) {
    throw std::invalid_argument("c_coefficient: need 1 <= j <= k");
  }
  if (k > kMaxMomentOrder) {
    throw std::invalid_argument("c_coefficient: k exceeds 20");
  }
  // binomials from Pascal's row j
  std::vector<wide_int> row(j + 1, 0);
  row[0] = 1;
  for (std::size_t n = 1; n <= j; ++n) {
    for (std::size_t r = n; r > 0; --r) {
      row[r] += row[r - 1];
    }
  }
  wide_int sum = 0;
  for (std::size_t r = 0; r < j; ++r) {
    wide_int power = 1;
    for (std::size_t e = 0; e < k; ++e) {
      power *= static_cast<wide_int>(j - r);
    }
    const wide_int term = row[r] * power;
    sum += (r % 2 == 0) ? term : -term;
  }
  wide_int factorial = 1;
  for (std::size_t n = 2; n <= j; ++n) {
    factorial *= static_cast<wide_int>(n);
  }
  return static_cast<std::uint64_t>(sum / factorial);
}

double adaptive_moment_rhs(double alpha, double lambda, std::size_t v_lambda, double m0_hat,
                           std::span<const std::size_t> r_leave, std::size_t k) {
  require_moment_order(k, r_leave.size() - 1, "adaptive_moment_rhs");
  const double ratio = alpha / lambda;
  double total = 0.0;
  for (std::size_t j = 1; j <= k; ++j) {
    const double ff = falling(v_lambda, j);
    if (ff == 0.0) {
      break;
    }
    const double rj = static_cast<double>(r_leave[j]);
    total += std::pow(ratio, static_cast<double>(j)) * static_cast<double>(c_coefficient(j, k)) * ff /
             std::pow(m0_hat, static_cast<double>(j)) * std::pow(rj, static_cast<double>(j) - static_cast<double>(k));
  }
  return total;
}

double deterministic_moment_rhs(std::size_t m0, std::span<const std::size_t> r_leave,
                                std::span<const double> crit_at, std::size_t k) {
  require_moment_order(k, r_leave.size() - 1, "deterministic_moment_rhs");
  double total = 0.0;
  for (std::size_t j = 1; j <= k; ++j) {
    const double ff = falling(m0, j);
    if (ff == 0.0) {
      break;
    }
    const double rj = static_cast<double>(r_leave[j]);
    total += static_cast<double>(c_coefficient(j, k)) * ff * std::pow(crit_at[j], static_cast<double>(j)) /
             std::pow(rj, static_cast<double>(k));
  }
  return total;
}

PairedStatistics paired_moment_k(const ProcedureSpec& spec, const PValueSample& sample, std::size_t k) {
  if (!spec.is_adaptive()) {
    throw std::invalid_argument("paired_moment_k: needs an adaptive procedure");
  }
  require_moment_order(k, kMaxMomentOrder, "paired_moment_k");
  const auto& fam = spec.adaptive_family();
  const StepUpOutcome out = run_procedure(spec, sample);
  const std::size_t v_lambda = count_null_below(sample, fam.lambda);
  std::vector<std::size_t> r_leave(k + 1, out.r);
  for (std::size_t j = 1; j <= k; ++j) {
    r_leave[j] = r_leave_j(spec, sample, j);
  }
  PairedStatistics stats;
  stats.k = k;
  stats.lhs = std::pow(out.fdp(), static_cast<double>(k));
  stats.rhs = adaptive_moment_rhs(fam.alpha, fam.lambda, v_lambda, *out.m0_hat, r_leave, k);
  return stats;
}

PairedStatistics paired_fdr(const ProcedureSpec& spec, const PValueSample& sample) {
  if (!spec.is_adaptive()) {
    throw std::invalid_argument("paired_fdr: needs an adaptive procedure");
  }
  const auto& fam = spec.adaptive_family();
  const StepUpOutcome out = run_procedure(spec, sample);
  PairedStatistics stats;
  stats.lhs = out.fdp();
  stats.rhs = fam.alpha / fam.lambda * static_cast<double>(count_null_below(sample, fam.lambda)) / *out.m0_hat;
  return stats;
}

PairedStatistics paired_ev(const ProcedureSpec& spec, const PValueSample& sample) {
  if (!spec.is_adaptive()) {
    throw std::invalid_argument("paired_ev: needs an adaptive procedure");
  }
  const auto& fam = spec.adaptive_family();
  const StepUpOutcome out = run_procedure(spec, sample);
  const std::size_t v_lambda = count_null_below(sample, fam.lambda);
  PairedStatistics stats;
  stats.lhs = static_cast<double>(out.v);
  if (v_lambda > 0) {
    stats.rhs = fam.alpha / fam.lambda * static_cast<double>(v_lambda) / *out.m0_hat *
                static_cast<double>(r_leave_j(spec, sample, 1));
  }
  return stats;
}

PairedStatistics deterministic_moment_pair(const ProcedureSpec& spec, const PValueSample& sample,
                                           std::size_t k) {
  if (spec.is_adaptive()) {
    throw std::invalid_argument("deterministic_moment_pair: needs deterministic critical values");
  }
  require_moment_order(k, kMaxMomentOrder, "deterministic_moment_pair");
  const CriticalValues critical = deterministic_critical_values(spec, sample.m());
  const StepUpOutcome out = run_procedure(spec, sample);
  std::vector<std::size_t> r_leave(k + 1, out.r);
  std::vector<double> crit_at(k + 1, 0.0);
  for (std::size_t j = 1; j <= k; ++j) {
    r_leave[j] = r_leave_j(spec, sample, j);
    crit_at[j] = r_leave[j] > 0 ? critical.at_count(r_leave[j]) : 0.0;
  }
  PairedStatistics stats;
  stats.k = k;
  stats.lhs = std::pow(out.fdp(), static_cast<double>(k));
  stats.rhs = deterministic_moment_rhs(sample.m0(), r_leave, crit_at, k);
  return stats;
}

double hoeffding_term(double lambda, std::size_t m0, double k_m, double alpha) {
  const double n0 = static_cast<double>(m0);
  return lambda * n0 * k_m / (alpha * std::exp(n0 * lambda / 8.0));
}

BoundReport variance_bounds(const BoundInputs& estimates, std::size_t m0, double lambda, double alpha, double k,
                         double z) {
  for (const McEstimate* e : {&estimates.var_fdp, &estimates.leading, &estimates.var_ratio,
                              &estimates.ratio_over_m0}) {
    if (e->n == 0) {
      throw std::invalid_argument("variance_bounds: missing component estimate");
    }
  }
  if (m0 == 0 || estimates.m < m0) {
    throw std::invalid_argument("variance_bounds: need 1 <= m0 <= m");
  }
  const double q = alpha / lambda;
  const double q2 = q * q;
  BoundReport rep;
  rep.var_fdp = estimates.var_fdp;
  rep.ratio_over_m0 = estimates.ratio_over_m0;

  rep.c_m_lambda.n = estimates.leading.n;
  rep.c_m_lambda.mean = q * estimates.leading.mean + q2 * estimates.var_ratio.mean;
  rep.c_m_lambda.se = std::hypot(q * estimates.leading.se, q2 * estimates.var_ratio.se);
  rep.c_m_lambda.variance = rep.c_m_lambda.se * rep.c_m_lambda.se * static_cast<double>(rep.c_m_lambda.n);

  rep.slack_term = 2.0 / (lambda * (static_cast<double>(m0) + 1.0));
  rep.ratio_bound = rep.slack_term / q2;

  const double k_m = k * static_cast<double>(estimates.m) / static_cast<double>(m0);
  rep.hoeffding = hoeffding_term(lambda, m0, k_m, alpha);
  const double scale = 4.0 * k_m * k_m / (alpha * alpha);
  rep.d_m_lambda.n = estimates.var_fdp.n;
  rep.d_m_lambda.mean =
      scale * (estimates.var_fdp.mean + rep.slack_term - q2 * estimates.var_ratio.mean) + rep.hoeffding;
  rep.d_m_lambda.se = scale * std::hypot(estimates.var_fdp.se, q2 * estimates.var_ratio.se);
  rep.d_m_lambda.variance = rep.d_m_lambda.se * rep.d_m_lambda.se * static_cast<double>(rep.d_m_lambda.n);

  rep.combined_se = std::hypot(rep.c_m_lambda.se, rep.var_fdp.se);
  const double c = rep.c_m_lambda.mean;
  const double var = rep.var_fdp.mean;
  const double tol = z * rep.combined_se;
  rep.stated_lower_holds = var >= c - tol;
  rep.stated_upper_holds = var <= c + rep.slack_term + tol;
  rep.ratio_bound_holds = rep.ratio_over_m0.mean <= rep.ratio_bound + z * rep.ratio_over_m0.se;
  rep.identity_lower_holds = var >= c - rep.slack_term - tol;
  rep.identity_upper_holds = var <= c + tol;
  return rep;
}

}  // namespace fdplab
