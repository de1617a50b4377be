#include "fdplab/procedures.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "fdplab/rng.hpp"

namespace fdplab {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("procedure: alpha must lie in (0,1)");
  }
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

ProcedureSpec ProcedureSpec::bh(double alpha) {
  check_alpha(alpha);
  return ProcedureSpec(BhFamily{alpha});
}

ProcedureSpec ProcedureSpec::adaptive(double alpha, double lambda, EstimatorSpec estimator) {
  check_alpha(alpha);
  if (!(lambda >= alpha && lambda < 1.0)) {
    throw std::invalid_argument("adaptive procedure: lambda must lie in [alpha, 1)");
  }
  if (estimator.kind() == EstimatorKind::interval_combination && estimator.grid().front() != lambda) {
    throw std::invalid_argument("adaptive procedure: estimator grid must start at lambda");
  }
  return ProcedureSpec(AdaptiveCappedFamily{alpha, lambda, std::move(estimator)});
}

ProcedureSpec ProcedureSpec::quotient(double alpha, double a, double b) {
  check_alpha(alpha);
  if (!quotient_parameters_valid(alpha, a, b)) {
    throw std::invalid_argument(
        "quotient procedure: need (b > 0 and 0 <= a <= 1 - alpha) or (b = 0 and 0 <= a < 1 - alpha)");
  }
  return ProcedureSpec(QuotientFamily{alpha, a, b});
}

double ProcedureSpec::alpha() const noexcept {
  return std::visit([](const auto& f) { return f.alpha; }, family_);
}

double ProcedureSpec::split_point() const noexcept {
  if (const auto* f = std::get_if<AdaptiveCappedFamily>(&family_)) {
    return f->lambda;
  }
  return 1.0;
}

std::string ProcedureSpec::label() const {
  std::ostringstream out;
  std::visit(overloaded{
                 [&](const BhFamily& f) { out << "BH(" << f.alpha << ")"; },
                 [&](const AdaptiveCappedFamily& f) {
                   out << "Adaptive(" << f.alpha << "," << f.lambda << "," << f.estimator.label() << ")";
                 },
                 [&](const QuotientFamily& f) { out << "Quotient(" << f.alpha << "," << f.a << "," << f.b << ")"; },
             },
             family_);
  return out.str();
}

CriticalValues bh_critical_values(std::size_t m, double alpha) {
  if (m == 0) {
    throw std::invalid_argument("bh_critical_values: m must be positive");
  }
  check_alpha(alpha);
  std::vector<double> alphas(m);
  for (std::size_t i = 1; i <= m; ++i) {
    alphas[i - 1] = static_cast<double>(i) * alpha / static_cast<double>(m);
  }
  return CriticalValues(std::move(alphas), "BH");
}

CriticalValues adaptive_critical_values(std::size_t m, double alpha, double lambda, double m0_hat) {
  if (!(m0_hat > 0.0)) {
    throw std::invalid_argument("adaptive_critical_values: m0_hat must be positive");
  }
  if (m == 0) {
    throw std::invalid_argument("adaptive_critical_values: m must be positive");
  }
  std::vector<double> alphas(m);
  for (std::size_t i = 1; i <= m; ++i) {
    alphas[i - 1] = adaptive_value(i, alpha, lambda, m0_hat);
  }
  return CriticalValues(std::move(alphas), "AdaptiveCapped");
}

bool quotient_parameters_valid(double alpha, double a, double b) noexcept {
  if (!(a >= 0.0)) {
    return false;
  }
  if (b > 0.0) {
    return a <= 1.0 - alpha;
  }
  return b == 0.0 && a < 1.0 - alpha;
}

double quotient_value(std::size_t i, std::size_t m, double alpha, double a, double b) noexcept {
  const double di = static_cast<double>(i);
  return di * alpha / (static_cast<double>(m) + b - a * di);
}

double aorc_value(std::size_t i, std::size_t m, double alpha) {
  if (i == 0 || i >= m) {
    throw std::domain_error("aorc_value: defined for 1 <= i < m only");
  }
  const double y = static_cast<double>(i) / static_cast<double>(m);
  return alpha * y / (1.0 - y * (1.0 - alpha));
}

CriticalValues quotient_critical_values(std::size_t m, double alpha, double a, double b) {
  check_alpha(alpha);
  if (!quotient_parameters_valid(alpha, a, b)) {
    throw std::invalid_argument(
        "quotient_critical_values: need (b > 0 and 0 <= a <= 1 - alpha) or (b = 0 and 0 <= a < 1 - alpha)");
  }
  if (m == 0) {
    throw std::invalid_argument("quotient_critical_values: m must be positive");
  }
  std::vector<double> alphas(m);
  for (std::size_t i = 1; i <= m; ++i) {
    alphas[i - 1] = quotient_value(i, m, alpha, a, b);
  }
  return CriticalValues(std::move(alphas), "Quotient");
}

CriticalValues deterministic_critical_values(const ProcedureSpec& spec, std::size_t m) {
  if (const auto* f = std::get_if<BhFamily>(&spec.family())) {
    return bh_critical_values(m, f->alpha);
  }
  if (const auto* f = std::get_if<QuotientFamily>(&spec.family())) {
    return quotient_critical_values(m, f->alpha, f->a, f->b);
  }
  throw std::invalid_argument("deterministic_critical_values: procedure is adaptive");
}

ProcedureSpec with_alpha(const ProcedureSpec& spec, double alpha) {
  return std::visit(overloaded{
                        [&](const BhFamily&) { return ProcedureSpec::bh(alpha); },
                        [&](const AdaptiveCappedFamily& f) { return ProcedureSpec::adaptive(alpha, f.lambda, f.estimator); },
                        [&](const QuotientFamily& f) { return ProcedureSpec::quotient(alpha, f.a, f.b); },
                    },
                    spec.family());
}

bool rejections_monotone_probe(const ProcedureSpec& spec, const PValueSample& sample, std::size_t trials,
                               std::uint64_t seed) {
  const std::size_t base = run_procedure(spec, sample).r;
  const CounterStream stream(seed, 1);
  std::vector<double> values(sample.values().begin(), sample.values().end());
  for (std::size_t t = 0; t < trials; ++t) {
    const auto j = static_cast<std::size_t>(stream.bits(2 * t) % sample.m());
    const double old = values[j];
    values[j] = old * stream.uniform(2 * t + 1);
    const std::size_t r = run_procedure(spec, PValueSample(values, sample.is_null())).r;
    values[j] = old;
    if (r < base) {
      return false;
    }
  }
  return true;
}

StepUpOutcome run_procedure(const ProcedureSpec& spec, const PValueSample& sample, FloorMode floor) {
  const std::size_t m = sample.m();
  StepUpOutcome out;
  const CriticalValues critical = std::visit(
      overloaded{
          [&](const BhFamily& f) { return bh_critical_values(m, f.alpha); },
          [&](const QuotientFamily& f) { return quotient_critical_values(m, f.alpha, f.a, f.b); },
          [&](const AdaptiveCappedFamily& f) {
            const TailView view = tail_view(sample, f.lambda, f.alpha);
            const EstimateRecord est = apply_floor(raw_estimate(f.estimator, view), view, f.alpha);
            const double m0_hat = floor == FloorMode::apply ? est.floored : est.raw;
            out.m0_hat = m0_hat;
            return adaptive_critical_values(m, f.alpha, f.lambda, m0_hat);
          },
      },
      spec.family());

  const auto order = sort_pvalues(sample);
  std::vector<double> sorted(m);
  for (std::size_t i = 0; i < m; ++i) {
    sorted[i] = sample.value(order[i]);
  }
  out.r = step_up_count(sorted, critical);
  out.v = false_rejection_count(sample, order, out.r, critical);
  if (out.r > 0) {
    out.threshold = critical.at_count(out.r);
    out.rejected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(out.r));
    std::sort(out.rejected.begin(), out.rejected.end());
  }
  return out;
}

}  // namespace fdplab
