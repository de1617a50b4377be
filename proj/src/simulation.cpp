#include "fdplab/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace fdplab {

namespace {

constexpr std::array<std::string_view, kChannelCount> kChannelNames{
    "fdp",          "v",            "r",
    "v_zero",       "v_lambda",     "r_lambda",
    "m0_hat",       "m0hat_over_m", "m0hat_over_m0_low",
    "threshold",    "ratio",        "ratio_over_m0hat",
    "leading",      "r1",           "r2",
    "r1_le_1",      "r1_le_5",      "r1_le_25",
    "quotient_gap", "quotient_scale",
    "fdr_lhs",      "fdr_rhs",      "fdr_diff",
    "ev_lhs",       "ev_rhs",       "ev_diff",
    "moment1_lhs",  "moment1_rhs",  "moment1_diff",
    "moment2_lhs",  "moment2_rhs",  "moment2_diff",
    "moment3_lhs",  "moment3_rhs",  "moment3_diff",
    "moment4_lhs",  "moment4_rhs",  "moment4_diff",
    "det1_lhs",     "det1_rhs",     "det1_diff",
    "det2_lhs",     "det2_rhs",     "det2_diff",
};

constexpr std::size_t idx(Channel c) { return static_cast<std::size_t>(c); }

Channel identity_base(Identity id) {
  return static_cast<Channel>(idx(Channel::fdr_lhs) + 3 * static_cast<std::size_t>(id));
}

std::size_t identity_order(Identity id) {
  switch (id) {
    case Identity::fdr:
      return 0;
    case Identity::ev:
    case Identity::moment1:
    case Identity::deterministic1:
      return 1;
    case Identity::moment2:
    case Identity::deterministic2:
      return 2;
    case Identity::moment3:
      return 3;
    case Identity::moment4:
      return 4;
  }
  return 1;
}

// Work is cut into fixed blocks of replicates; each block is summarized on
// its own and the summaries are merged in block order, so the floating-point
// result does not depend on how blocks were spread over threads.
template <class Fn>
std::vector<McSummary> run_blocks(std::size_t total, std::size_t block, std::size_t workers, Fn fn) {
  const std::size_t blocks = (total + block - 1) / block;
  std::vector<McSummary> out(blocks);
  if (workers == 0) {
    workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }
  workers = std::min(workers, std::max<std::size_t>(blocks, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    try {
      for (std::size_t b = next++; b < blocks; b = next++) {
        out[b] = fn(b * block, std::min(total, (b + 1) * block));
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = blocks;
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

McEstimate empty_estimate() {
  McEstimate e;
  e.mean = e.variance = e.se = std::numeric_limits<double>::quiet_NaN();
  return e;
}

McEstimate mean_or_empty(const McSummary& s, Channel c) { return s.has(c) ? s.mean(c) : empty_estimate(); }

McEstimate variance_or_empty(const McSummary& s, Channel c) {
  return s.has(c) ? s.variance(c) : empty_estimate();
}

}  // namespace

std::string_view channel_name(Channel c) { return kChannelNames.at(idx(c)); }

void McSummary::push(const std::array<double, kChannelCount>& values, std::span<const bool> active) {
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    if (active[i]) acc_[i].push(values[i]);
  }
  ++replicates_;
}

void McSummary::merge(const McSummary& other) {
  for (std::size_t i = 0; i < kChannelCount; ++i) acc_[i].merge(other.acc_[i]);
  replicates_ += other.replicates_;
}

McEstimate McSummary::mean(Channel c) const {
  if (!has(c)) throw std::invalid_argument("McSummary: channel " + std::string(channel_name(c)) + " is empty");
  return (*this)[c].mean_estimate();
}

McEstimate McSummary::variance(Channel c) const {
  if (!has(c)) throw std::invalid_argument("McSummary: channel " + std::string(channel_name(c)) + " is empty");
  return (*this)[c].variance_estimate();
}

McSummary run_mc(const ScenarioConfig& scenario, const ProcedureSpec& procedure, std::size_t replicates,
                 const RunOptions& options) {
  validate_scenario(scenario);
  if (replicates < 100) throw std::invalid_argument("run_mc: at least 100 replicates are required");
  if (options.block == 0) throw std::invalid_argument("run_mc: block size must be positive");

  const bool adaptive = procedure.is_adaptive();
  const std::size_t depth = std::min(options.leave_depth, adaptive ? kMaxLeaveDepth : std::size_t{2});
  const double alpha = procedure.alpha();
  const double lambda = procedure.split_point();
  double qa = 0.0, qb = 0.0;
  if (const auto* q = std::get_if<QuotientFamily>(&procedure.family())) {
    qa = q->a;
    qb = q->b;
  }
  const std::size_t m = scenario.m;
  const std::size_t m0 = scenario.m0();
  const double dm = static_cast<double>(m);
  const double dm0 = static_cast<double>(m0);
  const double scale = options.rhs_scale;

  std::array<bool, kChannelCount> active{};
  for (Channel c : {Channel::fdp, Channel::v, Channel::r, Channel::v_zero, Channel::v_lambda, Channel::r_lambda,
                    Channel::m0_hat, Channel::m0hat_over_m, Channel::m0hat_over_m0_low, Channel::threshold}) {
    active[idx(c)] = true;
  }
  if (depth >= 1) {
    for (Channel c : {Channel::r1, Channel::r1_le_1, Channel::r1_le_5, Channel::r1_le_25}) active[idx(c)] = true;
  }
  if (depth >= 2) active[idx(Channel::r2)] = true;
  auto enable_identity = [&](Identity id) {
    const std::size_t base = idx(identity_base(id));
    active[base] = active[base + 1] = active[base + 2] = true;
  };
  if (adaptive) {
    active[idx(Channel::ratio)] = active[idx(Channel::ratio_over_m0hat)] = true;
    enable_identity(Identity::fdr);
    if (depth >= 1) {
      active[idx(Channel::leading)] = true;
      enable_identity(Identity::ev);
    }
    for (std::size_t k = 1; k <= depth; ++k) {
      enable_identity(static_cast<Identity>(static_cast<std::size_t>(Identity::moment1) + k - 1));
    }
  } else {
    if (depth >= 1) {
      active[idx(Channel::quotient_scale)] = true;
      enable_identity(Identity::deterministic1);
    }
    if (depth >= 2) {
      active[idx(Channel::quotient_gap)] = true;
      enable_identity(Identity::deterministic2);
    }
  }

  auto block_fn = [&](std::size_t begin, std::size_t end) {
    McSummary sum;
    ReplicateEvaluator eval(procedure, depth);
    std::vector<double> buf(m);
    std::array<double, kChannelCount> x{};
    auto set = [&x](Channel c, double value) { x[idx(c)] = value; };
    auto set_identity = [&](Identity id, double lhs, double rhs) {
      const std::size_t base = idx(identity_base(id));
      x[base] = lhs;
      x[base + 1] = scale * rhs;
      x[base + 2] = lhs - scale * rhs;
    };
    for (std::size_t rep = begin; rep < end; ++rep) {
      fill_scenario(scenario, rep, buf);
      const ReplicateRecord rec = eval.evaluate_nulls_first(buf, m0);
      const double f = fdp(rec.v, rec.r);
      set(Channel::fdp, f);
      set(Channel::v, static_cast<double>(rec.v));
      set(Channel::r, static_cast<double>(rec.r));
      set(Channel::v_zero, rec.v == 0 ? 1.0 : 0.0);
      set(Channel::v_lambda, static_cast<double>(rec.v_lambda));
      set(Channel::r_lambda, static_cast<double>(rec.r_lambda));
      set(Channel::m0_hat, rec.m0_hat);
      set(Channel::m0hat_over_m, rec.m0_hat / dm);
      set(Channel::m0hat_over_m0_low, rec.m0_hat / dm0 <= 0.9 ? 1.0 : 0.0);
      set(Channel::threshold, rec.threshold);
      const double r1 = static_cast<double>(rec.r_leave[1]);
      if (depth >= 1) {
        set(Channel::r1, r1);
        set(Channel::r1_le_1, rec.r_leave[1] <= 1 ? 1.0 : 0.0);
        set(Channel::r1_le_5, rec.r_leave[1] <= 5 ? 1.0 : 0.0);
        set(Channel::r1_le_25, rec.r_leave[1] <= 25 ? 1.0 : 0.0);
      }
      if (depth >= 2) set(Channel::r2, static_cast<double>(rec.r_leave[2]));

      if (adaptive) {
        const double ratio = static_cast<double>(rec.v_lambda) / rec.m0_hat;
        set(Channel::ratio, ratio);
        set(Channel::ratio_over_m0hat, ratio / rec.m0_hat);
        set_identity(Identity::fdr, f, alpha / lambda * ratio);
        if (depth >= 1) {
          set(Channel::leading, rec.v_lambda > 0 ? ratio / r1 : 0.0);
          set_identity(Identity::ev, static_cast<double>(rec.v), alpha / lambda * ratio * r1);
        }
        double power = 1.0;
        for (std::size_t k = 1; k <= depth; ++k) {
          power *= f;
          set_identity(static_cast<Identity>(static_cast<std::size_t>(Identity::moment1) + k - 1), power,
                       adaptive_moment_rhs(alpha, lambda, rec.v_lambda, rec.m0_hat, rec.r_leave, k));
        }
      } else {
        if (depth >= 1) {
          set(Channel::quotient_scale, (dm + qb - qa * r1) / dm0);
          set_identity(Identity::deterministic1, f, deterministic_moment_rhs(m0, rec.r_leave, rec.crit_at, 1));
        }
        if (depth >= 2) {
          set(Channel::quotient_gap, qa / dm * (static_cast<double>(rec.r_leave[2]) - r1));
          set_identity(Identity::deterministic2, f * f, deterministic_moment_rhs(m0, rec.r_leave, rec.crit_at, 2));
        }
      }
      sum.push(x, active);
    }
    return sum;
  };

  const auto blocks = run_blocks(replicates, options.block, options.workers, block_fn);
  McSummary total;
  for (const auto& b : blocks) total.merge(b);
  return total;
}

Identity identity_from_name(std::string_view name) {
  if (name == "fdr") return Identity::fdr;
  if (name == "ev") return Identity::ev;
  if (name == "moment_1") return Identity::moment1;
  if (name == "moment_2") return Identity::moment2;
  if (name == "moment_3") return Identity::moment3;
  if (name == "moment_4") return Identity::moment4;
  if (name == "deterministic_k1") return Identity::deterministic1;
  if (name == "deterministic_k2") return Identity::deterministic2;
  throw std::invalid_argument("unknown identity '" + std::string(name) + "'");
}

std::string identity_name(Identity id) {
  switch (id) {
    case Identity::fdr: return "fdr";
    case Identity::ev: return "ev";
    case Identity::moment1: return "moment_1";
    case Identity::moment2: return "moment_2";
    case Identity::moment3: return "moment_3";
    case Identity::moment4: return "moment_4";
    case Identity::deterministic1: return "deterministic_k1";
    case Identity::deterministic2: return "deterministic_k2";
  }
  return "unknown";
}

bool identity_applies(Identity id, const ProcedureSpec& procedure) {
  const bool deterministic_id = id == Identity::deterministic1 || id == Identity::deterministic2;
  return deterministic_id != procedure.is_adaptive();
}

IdentityReport identity_report(const McSummary& summary, Identity id, double z_crit) {
  const std::size_t base = idx(identity_base(id));
  if (!summary.has(static_cast<Channel>(base + 2))) {
    throw std::invalid_argument("identity " + identity_name(id) + " was not evaluated for this procedure");
  }
  IdentityReport rep;
  rep.identity = id;
  rep.lhs = summary.mean(static_cast<Channel>(base));
  rep.rhs = summary.mean(static_cast<Channel>(base + 1));
  rep.diff = summary.mean(static_cast<Channel>(base + 2));
  const double d = rep.diff.mean, se = rep.diff.se;
  if (se > 0.0) {
    rep.z = d / se;
  } else {
    rep.z = d == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), d);
  }
  rep.lower_margin = d + z_crit * se;
  rep.upper_margin = z_crit * se - d;
  rep.pass = std::abs(d) <= z_crit * se;
  return rep;
}

IdentityReport check_identity(Identity id, const ScenarioConfig& scenario, const ProcedureSpec& procedure,
                              std::size_t replicates, const RunOptions& options) {
  if (!identity_applies(id, procedure)) {
    throw std::invalid_argument("identity " + identity_name(id) + " does not apply to " + procedure.label());
  }
  RunOptions opts = options;
  opts.leave_depth = std::max(opts.leave_depth, identity_order(id));
  return identity_report(run_mc(scenario, procedure, replicates, opts), id);
}

BoundInputs bound_inputs(const McSummary& summary, std::size_t m) {
  BoundInputs in;
  in.m = m;
  in.var_fdp = summary.variance(Channel::fdp);
  in.leading = summary.mean(Channel::leading);
  in.var_ratio = summary.variance(Channel::ratio);
  in.ratio_over_m0 = summary.mean(Channel::ratio_over_m0hat);
  return in;
}

std::size_t M1Rule::m1_for(std::size_t m) const {
  const double dm = static_cast<double>(m);
  double m1 = 0.0;
  switch (kind) {
    case M1RuleKind::fixed:
      m1 = value;
      break;
    case M1RuleKind::proportional:
      m1 = std::floor(value * dm + 0.5);
      break;
    case M1RuleKind::sqrt_scaled:
      m1 = std::ceil(value * std::sqrt(dm));
      break;
  }
  if (!(m1 >= 0.0) || m1 >= dm) {
    throw std::invalid_argument("m1 rule gives m1 >= m at m = " + std::to_string(m));
  }
  return static_cast<std::size_t>(m1);
}

void validate_sweep(const SweepConfig& config) {
  if (config.m_grid.empty()) throw std::invalid_argument("sweep: m_grid must not be empty");
  for (std::size_t i = 0; i < config.m_grid.size(); ++i) {
    if (config.m_grid[i] == 0 || (i > 0 && config.m_grid[i] <= config.m_grid[i - 1])) {
      throw std::invalid_argument("sweep: m_grid must be positive and strictly increasing");
    }
  }
  const double v = config.m1_rule.value;
  switch (config.m1_rule.kind) {
    case M1RuleKind::fixed:
      if (!(v >= 0.0) || v != std::floor(v)) throw std::invalid_argument("sweep: fixed m1 must be a nonnegative integer");
      break;
    case M1RuleKind::proportional:
      if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument("sweep: fraction must lie in (0,1)");
      break;
    case M1RuleKind::sqrt_scaled:
      if (!(v > 0.0)) throw std::invalid_argument("sweep: sqrt scale must be positive");
      break;
  }
  for (std::size_t m : config.m_grid) config.m1_rule.m1_for(m);
  if (config.replicates < 100) throw std::invalid_argument("sweep: at least 100 replicates are required");
  validate_alt(config.alt);
}

SweepRow sweep_row(const McSummary& summary, std::size_t m, std::size_t m1, double alpha) {
  SweepRow row;
  row.m = m;
  row.m1 = m1;
  row.fdr = summary.mean(Channel::fdp);
  row.var_fdp = summary.variance(Channel::fdp);
  row.p_v0 = summary.mean(Channel::v_zero);
  row.mean_r = summary.mean(Channel::r);
  row.mean_m0hat_over_m = summary.mean(Channel::m0hat_over_m);
  row.var_m0hat_ratio = variance_or_empty(summary, Channel::ratio);
  row.mean_threshold = summary.mean(Channel::threshold);
  row.p_r1_le_1 = mean_or_empty(summary, Channel::r1_le_1);
  row.p_r1_le_5 = mean_or_empty(summary, Channel::r1_le_5);
  row.p_r1_le_25 = mean_or_empty(summary, Channel::r1_le_25);
  row.p_m0hat_low = summary.mean(Channel::m0hat_over_m0_low);
  row.pass = row.fdr.mean <= alpha + 4.0 * row.fdr.se;
  return row;
}

std::vector<SweepRow> consistency_sweep(const SweepConfig& config, const RunOptions& options) {
  validate_sweep(config);
  RunOptions opts = options;
  opts.leave_depth = std::min<std::size_t>(opts.leave_depth, 1);
  std::vector<SweepRow> rows;
  for (std::size_t m : config.m_grid) {
    const std::size_t m1 = config.m1_rule.m1_for(m);
    const ScenarioConfig scenario{m, m1, config.alt, config.seed};
    rows.push_back(sweep_row(run_mc(scenario, config.procedure, config.replicates, opts), m, m1,
                             config.procedure.alpha()));
  }
  return rows;
}

std::vector<LevelProbeRow> level_probe(const SweepConfig& config, double alpha_lo, double alpha_hi,
                                       const RunOptions& options) {
  validate_sweep(config);
  if (!(alpha_lo > 0.0 && alpha_lo < alpha_hi && alpha_hi < 1.0)) {
    throw std::invalid_argument("level_probe: need 0 < alpha_lo < alpha_hi < 1");
  }
  RunOptions opts = options;
  opts.leave_depth = 0;
  std::vector<LevelProbeRow> rows;
  for (int i = 1; i <= 5; ++i) {
    const double alpha = alpha_lo + (alpha_hi - alpha_lo) * i / 6.0;
    const ProcedureSpec spec = with_alpha(config.procedure, alpha);
    for (std::size_t m : config.m_grid) {
      const ScenarioConfig scenario{m, config.m1_rule.m1_for(m), config.alt, config.seed};
      const McSummary s = run_mc(scenario, spec, config.replicates, opts);
      rows.push_back({alpha, m, s.mean(Channel::v), s.variance(Channel::fdp)});
    }
  }
  return rows;
}

std::vector<QuotientDiagnosticsRow> quotient_consistency_diagnostics(const SweepConfig& config,
                                                                     const RunOptions& options) {
  validate_sweep(config);
  if (config.procedure.is_adaptive()) {
    throw std::invalid_argument("quotient diagnostics: procedure must have deterministic critical values");
  }
  RunOptions opts = options;
  opts.leave_depth = 2;
  std::vector<QuotientDiagnosticsRow> rows;
  for (std::size_t m : config.m_grid) {
    const std::size_t m1 = config.m1_rule.m1_for(m);
    const McSummary s = run_mc({m, m1, config.alt, config.seed}, config.procedure, config.replicates, opts);
    QuotientDiagnosticsRow row;
    row.m = m;
    row.m1 = m1;
    row.p_r1_le_1 = s.mean(Channel::r1_le_1);
    row.p_r1_le_5 = s.mean(Channel::r1_le_5);
    row.p_r1_le_25 = s.mean(Channel::r1_le_25);
    row.gap = s.mean(Channel::quotient_gap);
    row.scale_var = s.variance(Channel::quotient_scale);
    row.fdr = s.mean(Channel::fdp);
    rows.push_back(row);
  }
  return rows;
}

LfcReport lfc_compare(std::size_t m, std::size_t m1, const ProcedureSpec& procedure,
                      const std::vector<AltModel>& alts, std::size_t replicates, std::uint64_t seed,
                      const RunOptions& options) {
  std::vector<AltModel> models;
  const auto is_du = [](const AltModel& a) {
    const auto* d = std::get_if<DiracAlt>(&a);
    return d != nullptr && d->c == 0.0;
  };
  if (std::none_of(alts.begin(), alts.end(), is_du)) models.push_back(DiracAlt{0.0});
  models.insert(models.end(), alts.begin(), alts.end());

  LfcReport rep;
  rep.estimator_monotone = true;
  if (procedure.is_adaptive()) {
    const auto& fam = procedure.adaptive_family();
    const auto probe_alt = std::find_if_not(models.begin(), models.end(), is_du);
    const ScenarioConfig probe{m, m1, probe_alt != models.end() ? *probe_alt : models.front(), seed};
    rep.estimator_monotone = monotonicity_probe(fam.estimator, sample_scenario(probe, 0), fam.lambda, 1000, seed);
  }
  if (!rep.estimator_monotone) {
    rep.warning = "estimator failed the monotonicity probe; the comparison carries no guarantee";
  }

  RunOptions opts = options;
  opts.leave_depth = 0;
  const double lambda = procedure.split_point();
  for (const auto& alt : models) {
    const McSummary s = run_mc({m, m1, alt, seed}, procedure, replicates, opts);
    LfcRow row;
    row.alt = alt;
    row.label = alt_label(alt);
    row.is_du = is_du(alt);
    row.below_lambda = alt_below(alt, lambda);
    row.fdr = s.mean(Channel::fdp);
    row.var_fdp = s.variance(Channel::fdp);
    rep.rows.push_back(row);
  }
  const LfcRow du = *std::find_if(rep.rows.begin(), rep.rows.end(), [](const LfcRow& r) { return r.is_du; });
  rep.fdr_maximal = true;
  rep.var_minimal = true;
  for (const auto& row : rep.rows) {
    if (row.is_du) continue;
    if (du.fdr.mean < row.fdr.mean - 4.0 * std::hypot(du.fdr.se, row.fdr.se)) rep.fdr_maximal = false;
    if (row.below_lambda && du.var_fdp.mean > row.var_fdp.mean + 4.0 * std::hypot(du.var_fdp.se, row.var_fdp.se)) {
      rep.var_minimal = false;
    }
  }
  std::stable_sort(rep.rows.begin(), rep.rows.end(),
                   [](const LfcRow& a, const LfcRow& b) { return a.fdr.mean > b.fdr.mean; });
  if (rep.estimator_monotone) rep.pass = rep.fdr_maximal && rep.var_minimal;
  return rep;
}

}  // namespace fdplab
