#include "fdplab/cli/execute.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <ostream>

namespace fdplab::cli {

namespace {

constexpr double kZ = 4.0;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

RunOptions options_for(const RunConfig& cfg) {
  RunOptions o;
  o.workers = cfg.workers;
  return o;
}

Json estimate_json(const McEstimate& e) {
  Json j = Json::object();
  j["mean"] = std::isfinite(e.mean) ? Json(e.mean) : Json(nullptr);
  j["se"] = std::isfinite(e.se) ? Json(e.se) : Json(nullptr);
  return j;
}

std::vector<Identity> identities_for(const RunConfig& cfg, const ProcedureSpec& proc) {
  if (!cfg.identities.empty()) return cfg.identities;
  std::vector<Identity> out;
  for (Identity id : {Identity::fdr, Identity::ev, Identity::moment2, Identity::moment3, Identity::moment4,
                      Identity::deterministic1, Identity::deterministic2}) {
    if (identity_applies(id, proc)) out.push_back(id);
  }
  return out;
}

CommandResult verify_moments(const RunConfig& cfg) {
  CommandResult res;
  res.table.columns = {"procedure", "alt", "m", "m1", "check", "lhs", "rhs", "diff", "se", "z",
                       "lower_margin", "upper_margin", "pass"};
  Json bounds = Json::array();
  RunOptions opts = options_for(cfg);
  opts.rhs_scale = cfg.rhs_scale;
  for (const auto& proc : cfg.procedures) {
    for (const auto& sc : cfg.scenarios) {
      const McSummary s = run_mc(sc, proc, cfg.replicates, opts);
      const std::string alt = alt_label(sc.alt);
      const auto row = [&](std::string check, double lhs, double rhs, double se, double lo, double hi, bool pass) {
        const double diff = lhs - rhs;
        res.table.add_row({proc.label(), alt, std::uint64_t{sc.m}, std::uint64_t{sc.m1}, std::move(check), lhs, rhs,
                           diff, se, se > 0.0 ? diff / se : kNaN, lo, hi, pass});
        res.all_pass = res.all_pass && pass;
      };
      for (Identity id : identities_for(cfg, proc)) {
        const IdentityReport r = identity_report(s, id, kZ);
        res.table.add_row({proc.label(), alt, std::uint64_t{sc.m}, std::uint64_t{sc.m1}, identity_name(id),
                           r.lhs.mean, r.rhs.mean, r.diff.mean, r.diff.se, r.z, r.lower_margin, r.upper_margin,
                           r.pass});
        res.all_pass = res.all_pass && r.pass;
      }
      if (cfg.bounds && proc.is_adaptive()) {
        const auto& fam = proc.adaptive_family();
        const BoundReport b = variance_bounds(bound_inputs(s, sc.m), sc.m0(), fam.lambda, fam.alpha,
                                           a3_constant(fam.estimator, fam.lambda), kZ);
        const double var = b.var_fdp.mean;
        const double c = b.c_m_lambda.mean;
        const double se = b.combined_se;
        row("bound_lower", var, c, se, var - c + kZ * se, kNaN, b.stated_lower_holds);
        row("bound_upper", var, c + b.slack_term, se, kNaN, kZ * se - (var - c - b.slack_term),
            b.stated_upper_holds);
        row("ratio_bound", b.ratio_over_m0.mean, b.ratio_bound, b.ratio_over_m0.se, kNaN,
            kZ * b.ratio_over_m0.se - (b.ratio_over_m0.mean - b.ratio_bound), b.ratio_bound_holds);
        Json d = Json::object();
        d["procedure"] = proc.label();
        d["alt"] = alt;
        d["m"] = sc.m;
        d["m1"] = sc.m1;
        d["c_m_lambda"] = estimate_json(b.c_m_lambda);
        d["slack"] = b.slack_term;
        d["d_m_lambda"] = estimate_json(b.d_m_lambda);
        d["hoeffding"] = b.hoeffding;
        d["identity_lower_holds"] = b.identity_lower_holds;
        d["identity_upper_holds"] = b.identity_upper_holds;
        bounds.push_back(std::move(d));
      }
    }
  }
  res.diagnostics["z"] = kZ;
  res.diagnostics["rhs_scale"] = cfg.rhs_scale;
  if (cfg.bounds) res.diagnostics["bounds"] = std::move(bounds);
  return res;
}

CommandResult fdr_table(const RunConfig& cfg) {
  CommandResult res;
  const Table base = sweep_table({});
  res.table.columns = {"procedure", "alt"};
  res.table.columns.insert(res.table.columns.end(), base.columns.begin(), base.columns.end());
  RunOptions opts = options_for(cfg);
  opts.leave_depth = 1;
  for (const auto& proc : cfg.procedures) {
    for (const auto& sc : cfg.scenarios) {
      const SweepRow r = sweep_row(run_mc(sc, proc, cfg.replicates, opts), sc.m, sc.m1, proc.alpha());
      std::vector<Cell> row{proc.label(), alt_label(sc.alt)};
      const auto tail = sweep_table({r}).rows.front();
      row.insert(row.end(), tail.begin(), tail.end());
      res.table.add_row(std::move(row));
      res.all_pass = res.all_pass && r.pass;
    }
  }
  return res;
}

CommandResult consistency(const RunConfig& cfg) {
  CommandResult res;
  const SweepConfig& sw = *cfg.sweep;
  const auto rows = consistency_sweep(sw, options_for(cfg));
  res.table = sweep_table(rows);
  Json proxies = Json::array();
  for (const auto& r : rows) {
    res.all_pass = res.all_pass && r.pass;
    Json p = Json::object();
    p["m"] = r.m;
    p["m1"] = r.m1;
    p["var_m0hat_ratio"] = estimate_json(r.var_m0hat_ratio);
    p["p_r1_le_1"] = estimate_json(r.p_r1_le_1);
    p["p_r1_le_5"] = estimate_json(r.p_r1_le_5);
    p["p_r1_le_25"] = estimate_json(r.p_r1_le_25);
    p["p_m0hat_over_m0_le_0.9"] = estimate_json(r.p_m0hat_low);
    p["mean_threshold"] = estimate_json(r.mean_threshold);
    proxies.push_back(std::move(p));
  }
  res.diagnostics["procedure"] = sw.procedure.label();
  res.diagnostics["alt"] = alt_label(sw.alt);
  res.diagnostics["proxies"] = std::move(proxies);
  if (cfg.level_probe) {
    Json lp = Json::object();
    lp["partial"] = true;  // five sampled levels stand in for a whole interval
    Json lrows = Json::array();
    for (const auto& r : level_probe(sw, cfg.level_probe->alpha_lo, cfg.level_probe->alpha_hi, options_for(cfg))) {
      Json j = Json::object();
      j["alpha"] = r.alpha;
      j["m"] = r.m;
      j["mean_v"] = estimate_json(r.mean_v);
      j["var_fdp"] = estimate_json(r.var_fdp);
      lrows.push_back(std::move(j));
    }
    lp["rows"] = std::move(lrows);
    res.diagnostics["level_probe"] = std::move(lp);
  }
  return res;
}

CommandResult lfc(const RunConfig& cfg) {
  CommandResult res;
  const LfcBlock& b = *cfg.lfc;
  const LfcReport rep = lfc_compare(b.m, b.m1, b.procedure, b.alts, cfg.replicates, cfg.seed, options_for(cfg));
  res.table.columns = {"alt", "is_du", "below_lambda", "fdr_mean", "fdr_se", "var_fdp_mean", "var_fdp_se"};
  for (const auto& r : rep.rows) {
    res.table.add_row({r.label, r.is_du, r.below_lambda, r.fdr.mean, r.fdr.se, r.var_fdp.mean, r.var_fdp.se});
  }
  res.diagnostics["procedure"] = b.procedure.label();
  res.diagnostics["estimator_monotone"] = rep.estimator_monotone;
  res.diagnostics["fdr_maximal"] = rep.fdr_maximal;
  res.diagnostics["var_minimal"] = rep.var_minimal;
  res.diagnostics["pass"] = rep.pass ? Json(*rep.pass) : Json(nullptr);
  if (!rep.warning.empty()) res.diagnostics["warning"] = rep.warning;
  res.all_pass = rep.pass.value_or(false);
  return res;
}

CommandResult calibrate(const RunConfig& cfg) {
  CommandResult res;
  const CalibrationConfig& c = *cfg.calibration;
  const CalibrationResult r = calibrate_aorc_a(c, options_for(cfg));
  res.table.columns = {"step", "a", "objective", "se", "worst_m1"};
  for (std::size_t i = 0; i < r.path.size(); ++i) {
    const auto& s = r.path[i];
    res.table.add_row({std::uint64_t{i}, s.a, s.objective, s.se, std::uint64_t{s.worst_m1}});
  }
  const bool interior = r.a_m > 0.0 && r.a_m < 1.0 - c.alpha;
  Json& d = res.diagnostics;
  d["a_m"] = r.a_m;
  d["sup_fdr"] = r.sup_fdr;
  d["sup_fdr_se"] = r.sup_fdr_se;
  d["bracket"] = Json::array({r.lo, r.hi});
  d["m1_grid"] = c.m1_grid.empty() ? default_m1_grid(c.m) : c.m1_grid;
  d["path_monotone"] = r.path_monotone;
  d["verify_seed"] = r.verify_seed;
  d["verified_sup_fdr"] = r.verified_sup_fdr;
  d["verified_se"] = r.verified_se;
  d["within_tolerance"] = r.within_tolerance;
  d["a_m_interior"] = interior;
  res.all_pass = r.within_tolerance && r.path_monotone && interior;
  return res;
}

CommandResult quotient_diagnostics(const RunConfig& cfg) {
  CommandResult res;
  res.table.columns = {"m",           "m1",        "p_r1_le_1_mean", "p_r1_le_1_se", "p_r1_le_5_mean",
                       "p_r1_le_5_se", "p_r1_le_25_mean", "p_r1_le_25_se", "gap_mean", "gap_se",
                       "scale_var_mean", "scale_var_se", "fdr_mean", "fdr_se"};
  for (const auto& r : quotient_consistency_diagnostics(*cfg.sweep, options_for(cfg))) {
    res.table.add_row({std::uint64_t{r.m}, std::uint64_t{r.m1}, r.p_r1_le_1.mean, r.p_r1_le_1.se, r.p_r1_le_5.mean,
                       r.p_r1_le_5.se, r.p_r1_le_25.mean, r.p_r1_le_25.se, r.gap.mean, r.gap.se, r.scale_var.mean,
                       r.scale_var.se, r.fdr.mean, r.fdr.se});
  }
  res.diagnostics["procedure"] = cfg.sweep->procedure.label();
  res.diagnostics["alt"] = alt_label(cfg.sweep->alt);
  return res;
}

}  // namespace

CommandResult run_command(const RunConfig& config) {
  switch (config.command) {
    case Command::verify_moments:
      return verify_moments(config);
    case Command::fdr_table:
      return fdr_table(config);
    case Command::consistency_sweep:
      return consistency(config);
    case Command::lfc_check:
      return lfc(config);
    case Command::calibrate_aorc:
      return calibrate(config);
    case Command::diagnostics_quotient:
      return quotient_diagnostics(config);
  }
  throw std::logic_error("run_command: unknown command");
}

Json make_metadata(const RunConfig& config, const CommandResult& result) {
  Json meta = Json::object();
  meta["seed"] = config.seed;
  meta["replicates"] = config.replicates;
  meta["version"] = FDPLAB_VERSION;
  meta["command"] = std::string(command_name(config.command));
  meta["config"] = config.echo;
  meta["all_pass"] = result.all_pass;
  meta["diagnostics"] = result.diagnostics;
  return meta;
}

int execute(const RunConfig& config, std::ostream& err) {
  try {
    if (!config.output_path.empty()) {
      const auto dir = std::filesystem::path(config.output_path).parent_path();
      if (!dir.empty() && !std::filesystem::is_directory(dir)) {
        err << "fdp-lab: output directory '" << dir.string() << "' does not exist\n";
        return kExitError;
      }
    }
    const CommandResult result = run_command(config);
    emit_table(result.table, make_metadata(config, result), config.format, config.output_path);
    if (!result.all_pass) {
      err << "fdp-lab: " << command_name(config.command) << ": at least one check failed\n";
      return kExitCheckFailed;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "fdp-lab: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace fdplab::cli
