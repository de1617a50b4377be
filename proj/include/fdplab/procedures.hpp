#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>

#include "fdplab/core.hpp"
#include "fdplab/estimators.hpp"

namespace fdplab {

struct BhFamily {
  double alpha;
};

/// Plug-in critical values min(i alpha / m0_hat, lambda).
struct AdaptiveCappedFamily {
  double alpha;
  double lambda;
  EstimatorSpec estimator;
};

/// i alpha / (m + b - a i).
struct QuotientFamily {
  double alpha;
  double a;
  double b;
};

class ProcedureSpec {
public:
  using Family = std::variant<BhFamily, AdaptiveCappedFamily, QuotientFamily>;

  static ProcedureSpec bh(double alpha);
  static ProcedureSpec adaptive(double alpha, double lambda, EstimatorSpec estimator);
  static ProcedureSpec quotient(double alpha, double a, double b);

  const Family& family() const noexcept { return family_; }
  double alpha() const noexcept;
  bool is_adaptive() const noexcept { return std::holds_alternative<AdaptiveCappedFamily>(family_); }
  const AdaptiveCappedFamily& adaptive_family() const { return std::get<AdaptiveCappedFamily>(family_); }
  /// lambda of an adaptive procedure; 1 for deterministic critical values.
  double split_point() const noexcept;
  std::string label() const;

private:
  explicit ProcedureSpec(Family f) : family_(std::move(f)) {}
  Family family_;
};

CriticalValues bh_critical_values(std::size_t m, double alpha);
CriticalValues adaptive_critical_values(std::size_t m, double alpha, double lambda, double m0_hat);
CriticalValues quotient_critical_values(std::size_t m, double alpha, double a, double b);

/// Critical values of a BH or quotient procedure; throws for adaptive ones.
CriticalValues deterministic_critical_values(const ProcedureSpec& spec, std::size_t m);

/// (b > 0 and 0 <= a <= 1 - alpha) or (b = 0 and 0 <= a < 1 - alpha).
bool quotient_parameters_valid(double alpha, double a, double b) noexcept;

/// i alpha / (m + b - a i) without any validity check.
double quotient_value(std::size_t i, std::size_t m, double alpha, double a, double b) noexcept;

/// Inverse of the curve f(t) = t / (t (1 - alpha) + alpha) at i/m, i < m.
double aorc_value(std::size_t i, std::size_t m, double alpha);

/// The adaptive critical value for `count` rejections; shared with the
/// replicate engine so both evaluate the identical expression.
inline double adaptive_value(std::size_t count, double alpha, double lambda, double m0_hat) noexcept {
  const double plain = static_cast<double>(count) * alpha / m0_hat;
  return plain < lambda ? plain : lambda;
}

/// Same family and parameters at another level.
ProcedureSpec with_alpha(const ProcedureSpec& spec, double alpha);

/// `trials` random single-coordinate decreases of `sample`, each compared
/// with the original R. True when R never drops.
bool rejections_monotone_probe(const ProcedureSpec& spec, const PValueSample& sample, std::size_t trials,
                               std::uint64_t seed);

enum class FloorMode {
  apply,  ///< use max(raw, (alpha/lambda) R(lambda))
  raw,    ///< plug in the unfloored estimate
};

/// Full step-up run. For adaptive procedures m0_hat is estimated from the
/// sample's TailView and, by default, floored.
StepUpOutcome run_procedure(const ProcedureSpec& spec, const PValueSample& sample,
                            FloorMode floor = FloorMode::apply);

}  // namespace fdplab
