#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fdplab/models.hpp"
#include "fdplab/moments.hpp"
#include "fdplab/procedures.hpp"
#include "fdplab/stats.hpp"

namespace fdplab {

/// Per-replicate quantities streamed by run_mc.
enum class Channel : std::size_t {
  fdp,
  v,
  r,
  v_zero,            // 1{V = 0}
  v_lambda,
  r_lambda,
  m0_hat,
  m0hat_over_m,
  m0hat_over_m0_low,  // 1{m0_hat / m0 <= 0.9}
  threshold,
  ratio,             // V(l) / m0_hat
  ratio_over_m0hat,  // V(l) / m0_hat^2
  leading,           // V(l) / m0_hat / R^{(1,l)}, 0 when V(l) = 0
  r1,
  r2,
  r1_le_1,
  r1_le_5,
  r1_le_25,
  quotient_gap,    // (a/m)(R^{(2,1)} - R^{(1,1)})
  quotient_scale,  // (m + b - a R^{(1,1)}) / m0
  // identity triples: lhs, rhs, lhs - rhs
  fdr_lhs, fdr_rhs, fdr_diff,
  ev_lhs, ev_rhs, ev_diff,
  moment1_lhs, moment1_rhs, moment1_diff,
  moment2_lhs, moment2_rhs, moment2_diff,
  moment3_lhs, moment3_rhs, moment3_diff,
  moment4_lhs, moment4_rhs, moment4_diff,
  det1_lhs, det1_rhs, det1_diff,
  det2_lhs, det2_rhs, det2_diff,
  count_
};

inline constexpr std::size_t kChannelCount = static_cast<std::size_t>(Channel::count_);

std::string_view channel_name(Channel c);

/// Aggregated Monte-Carlo output: one accumulator per channel. Channels that
/// do not apply to the procedure stay empty.
class McSummary {
public:
  void push(const std::array<double, kChannelCount>& values, std::span<const bool> active);
  void merge(const McSummary& other);

  const MomentAccumulator& operator[](Channel c) const { return acc_[static_cast<std::size_t>(c)]; }
  bool has(Channel c) const { return (*this)[c].count() > 0; }
  /// Throws std::invalid_argument when the channel is empty.
  McEstimate mean(Channel c) const;
  McEstimate variance(Channel c) const;
  std::size_t replicates() const noexcept { return replicates_; }

private:
  std::array<MomentAccumulator, kChannelCount> acc_{};
  std::size_t replicates_ = 0;
};

struct RunOptions {
  std::size_t workers = 1;    // 0 = hardware concurrency
  std::size_t block = 2048;   // replicates per work unit; fixes the merge tree
  std::size_t leave_depth = kMaxLeaveDepth;
  double rhs_scale = 1.0;     // multiplies every identity rhs (checker self-test)
};

/// Streams every channel over replicates 0..replicates-1 of the scenario.
/// The result depends only on (scenario, procedure, replicates, block,
/// leave_depth, rhs_scale), not on the worker count.
McSummary run_mc(const ScenarioConfig& scenario, const ProcedureSpec& procedure, std::size_t replicates,
                 const RunOptions& options = {});

enum class Identity { fdr, ev, moment1, moment2, moment3, moment4, deterministic1, deterministic2 };

Identity identity_from_name(std::string_view name);
std::string identity_name(Identity id);
bool identity_applies(Identity id, const ProcedureSpec& procedure);

struct IdentityReport {
  Identity identity = Identity::fdr;
  McEstimate lhs;
  McEstimate rhs;
  McEstimate diff;
  double z = 0.0;
  double lower_margin = 0.0;  // diff + z_crit se  (>= 0 when not too low)
  double upper_margin = 0.0;  // z_crit se - diff  (>= 0 when not too high)
  bool pass = false;
};

IdentityReport identity_report(const McSummary& summary, Identity id, double z_crit = 4.0);

IdentityReport check_identity(Identity id, const ScenarioConfig& scenario, const ProcedureSpec& procedure,
                              std::size_t replicates, const RunOptions& options = {});

/// Inputs of variance_bounds taken from a summary of an adaptive procedure.
BoundInputs bound_inputs(const McSummary& summary, std::size_t m);

enum class M1RuleKind { fixed, proportional, sqrt_scaled };

struct M1Rule {
  M1RuleKind kind = M1RuleKind::fixed;
  double value = 0.0;  // m1, fraction, or c in ceil(c sqrt(m))

  /// Proportional rounds half up: floor(f m + 1/2).
  std::size_t m1_for(std::size_t m) const;
};

struct SweepConfig {
  std::vector<std::size_t> m_grid;
  M1Rule m1_rule;
  ProcedureSpec procedure = ProcedureSpec::bh(0.05);
  AltModel alt = DiracAlt{0.0};
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
};

void validate_sweep(const SweepConfig& config);

struct SweepRow {
  std::size_t m = 0;
  std::size_t m1 = 0;
  McEstimate fdr;
  McEstimate var_fdp;
  McEstimate p_v0;
  McEstimate mean_r;
  McEstimate mean_m0hat_over_m;
  McEstimate var_m0hat_ratio;  // Var(V(l) / m0_hat)
  McEstimate mean_threshold;
  // finite-m proxies
  McEstimate p_r1_le_1;
  McEstimate p_r1_le_5;
  McEstimate p_r1_le_25;
  McEstimate p_m0hat_low;  // P(m0_hat / m0 <= 0.9)
  bool pass = false;       // fdr <= alpha + 4 se
};

SweepRow sweep_row(const McSummary& summary, std::size_t m, std::size_t m1, double alpha);

std::vector<SweepRow> consistency_sweep(const SweepConfig& config, const RunOptions& options = {});

struct LevelProbeRow {
  double alpha = 0.0;
  std::size_t m = 0;
  McEstimate mean_v;
  McEstimate var_fdp;
};

/// Five levels spread evenly over (alpha_lo, alpha_hi), each run on the
/// sweep's m grid.
std::vector<LevelProbeRow> level_probe(const SweepConfig& config, double alpha_lo, double alpha_hi,
                                       const RunOptions& options = {});

struct QuotientDiagnosticsRow {
  std::size_t m = 0;
  std::size_t m1 = 0;
  McEstimate p_r1_le_1;
  McEstimate p_r1_le_5;
  McEstimate p_r1_le_25;
  McEstimate gap;        // mean of (a/m)(R2 - R1)
  McEstimate scale_var;  // variance of (m + b - a R1) / m0
  McEstimate fdr;
};

std::vector<QuotientDiagnosticsRow> quotient_consistency_diagnostics(const SweepConfig& config,
                                                                     const RunOptions& options = {});

struct LfcRow {
  AltModel alt;
  std::string label;
  bool is_du = false;
  bool below_lambda = false;  // alternatives a.s. <= lambda
  McEstimate fdr;
  McEstimate var_fdp;
};

struct LfcReport {
  std::vector<LfcRow> rows;  // by FDR, largest first
  bool estimator_monotone = false;
  bool fdr_maximal = false;
  bool var_minimal = false;
  std::optional<bool> pass;  // withheld when the estimator fails the probe
  std::string warning;
};

/// Dirac(0) is added when missing. All models share the null draws.
LfcReport lfc_compare(std::size_t m, std::size_t m1, const ProcedureSpec& procedure,
                      const std::vector<AltModel>& alts, std::size_t replicates, std::uint64_t seed,
                      const RunOptions& options = {});

struct CalibrationConfig {
  std::size_t m = 50;
  double b = 1.0;
  double alpha = 0.05;
  std::vector<std::size_t> m1_grid;  // empty: default grid
  std::size_t replicates = 100000;
  double tolerance = 0.01;
  std::uint64_t seed = 0;
};

struct CalibrationStep {
  double a = 0.0;
  double objective = 0.0;
  double se = 0.0;
  std::size_t worst_m1 = 0;
};

struct CalibrationResult {
  double a_m = 0.0;
  double sup_fdr = 0.0;
  double sup_fdr_se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<CalibrationStep> path;  // in evaluation order
  bool path_monotone = false;
  std::uint64_t verify_seed = 0;
  double verified_sup_fdr = 0.0;
  double verified_se = 0.0;
  bool within_tolerance = false;  // |verified - alpha| <= tolerance
};

/// {1, ceil(m/10), ceil(m/4), ceil(m/2), m-1}, deduplicated.
std::vector<std::size_t> default_m1_grid(std::size_t m);

/// max over m1 of the FDR of Quotient(alpha, a, b) under DU(m, m1).
CalibrationStep aorc_objective(const CalibrationConfig& config, double a, std::uint64_t seed,
                               const RunOptions& options = {});

CalibrationResult calibrate_aorc_a(const CalibrationConfig& config, const RunOptions& options = {});

}  // namespace fdplab
