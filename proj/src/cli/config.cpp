#include "fdplab/cli/config.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <utility>

namespace fdplab::cli {

namespace {

constexpr std::array<std::pair<Command, std::string_view>, 6> kCommands{{
    {Command::verify_moments, "verify-moments"},
    {Command::fdr_table, "fdr-table"},
    {Command::consistency_sweep, "consistency-sweep"},
    {Command::lfc_check, "lfc-check"},
    {Command::calibrate_aorc, "calibrate-aorc"},
    {Command::diagnostics_quotient, "diagnostics-quotient"},
}};

[[noreturn]] void fail(const std::string& field, const std::string& detail) {
  throw ConfigError(ConfigErrorCode::validate, field, detail);
}

// Nonnegative integers; whole floats such as 1e5 are accepted too.
bool as_count(const Json& v, std::uint64_t& out) {
  if (v.is_number_unsigned()) {
    out = v.get<std::uint64_t>();
    return true;
  }
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) return false;
    out = static_cast<std::uint64_t>(v.get<std::int64_t>());
    return true;
  }
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (!(x >= 0.0 && x <= 9007199254740992.0) || x != std::floor(x)) return false;
    out = static_cast<std::uint64_t>(x);
    return true;
  }
  return false;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Wraps one JSON object; remembers which keys were read so leftovers can be
// reported once the object has been fully consumed.
class ObjectReader {
public:
  ObjectReader(const Json& node, std::string path, const ParseOptions& opts)
      : node_(node), path_(std::move(path)), opts_(opts) {
    if (!node_.is_object()) fail(path_.empty() ? "(document)" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return join(path_, key); }
  bool has(const std::string& key) const { return node_.contains(key); }

  const Json& get(const std::string& key) {
    if (!has(key)) fail(field(key), "missing");
    used_.insert(key);
    return node_.at(key);
  }

  double number(const std::string& key) {
    const Json& v = get(key);
    if (!v.is_number()) fail(field(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(field(key), "must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::uint64_t count(const std::string& key) {
    std::uint64_t out = 0;
    if (!as_count(get(key), out)) fail(field(key), "expected a nonnegative integer");
    return out;
  }
  std::uint64_t count(const std::string& key, std::uint64_t fallback) { return has(key) ? count(key) : fallback; }

  std::string text(const std::string& key) {
    const Json& v = get(key);
    if (!v.is_string()) fail(field(key), "expected a string");
    return v.get<std::string>();
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = get(key);
    if (!v.is_boolean()) fail(field(key), "expected true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& key) {
    const Json& v = get(key);
    if (!v.is_array()) fail(field(key), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) fail(field(key), "expected an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::vector<std::size_t> counts(const std::string& key) {
    const Json& v = get(key);
    if (!v.is_array()) fail(field(key), "expected an array of nonnegative integers");
    std::vector<std::size_t> out;
    for (const auto& x : v) {
      std::uint64_t n = 0;
      if (!as_count(x, n)) fail(field(key), "expected an array of nonnegative integers");
      out.push_back(n);
    }
    return out;
  }

  void finish() {
    for (const auto& item : node_.items()) {
      if (used_.count(item.key()) != 0) continue;
      const std::string name = field(item.key());
      if (opts_.strict) throw ConfigError(ConfigErrorCode::unknown_key, name, "unknown key");
      if (opts_.ignored != nullptr) opts_.ignored->push_back(name);
    }
  }

private:
  const Json& node_;
  std::string path_;
  const ParseOptions& opts_;
  std::set<std::string> used_;
};

// Runs a library constructor and re-labels its complaint with the field.
template <class F>
auto guarded(const std::string& field, F&& make) {
  try {
    return make();
  } catch (const std::invalid_argument& e) {
    fail(field, e.what());
  } catch (const std::domain_error& e) {
    fail(field, e.what());
  }
}

AltModel parse_alt(const Json& node, const std::string& path, const ParseOptions& opts) {
  ObjectReader r(node, path, opts);
  const std::string type = r.text("type");
  AltModel alt;
  if (type == "dirac") {
    alt = DiracAlt{r.number("c", 0.0)};
  } else if (type == "uniform") {
    alt = UniformAlt{r.number("upper")};
  } else if (type == "min_uniform") {
    alt = MinUniformAlt{r.number("cap")};
  } else if (type == "piecewise_linear") {
    const Json& knots = r.get("knots");
    PiecewiseLinearAlt pl;
    if (!knots.is_array()) fail(r.field("knots"), "expected an array of [x, F] pairs");
    for (const auto& k : knots) {
      if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number()) {
        fail(r.field("knots"), "expected an array of [x, F] pairs");
      }
      pl.knots.emplace_back(k[0].get<double>(), k[1].get<double>());
    }
    alt = std::move(pl);
  } else {
    fail(r.field("type"), "unknown alternative '" + type + "' (dirac, uniform, min_uniform, piecewise_linear)");
  }
  r.finish();
  guarded(path, [&] {
    validate_alt(alt);
    return 0;
  });
  return alt;
}

EstimatorSpec parse_estimator(const Json& node, const std::string& path, const ParseOptions& opts) {
  ObjectReader r(node, path, opts);
  const std::string type = r.text("type");
  EstimatorSpec spec = EstimatorSpec::trivial();
  if (type == "trivial") {
  } else if (type == "storey") {
    spec = EstimatorSpec::storey();
  } else if (type == "combination") {
    auto grid = r.numbers("grid");
    auto weights = r.numbers("weights");
    // grid problems first so the message names the right field
    guarded(r.field("grid"), [&] { return EstimatorSpec::nested_tail(grid); });
    spec = guarded(r.field("weights"), [&] { return EstimatorSpec::combination(grid, weights); });
  } else if (type == "nested_tail") {
    auto grid = r.numbers("grid");
    spec = guarded(r.field("grid"), [&] { return EstimatorSpec::nested_tail(grid); });
  } else {
    fail(r.field("type"), "unknown estimator '" + type + "' (trivial, storey, combination, nested_tail)");
  }
  r.finish();
  return spec;
}

ProcedureSpec parse_procedure(const Json& node, const std::string& path, const ParseOptions& opts) {
  ObjectReader r(node, path, opts);
  const std::string type = r.text("type");
  const double alpha = r.number("alpha");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(r.field("alpha"), "must lie in (0,1)");
  std::optional<ProcedureSpec> spec;
  if (type == "bh") {
    spec = ProcedureSpec::bh(alpha);
  } else if (type == "adaptive") {
    const double lambda = r.number("lambda");
    if (!(lambda >= alpha && lambda < 1.0)) fail(r.field("lambda"), "must lie in [alpha, 1)");
    EstimatorSpec est = EstimatorSpec::storey();
    if (r.has("estimator")) est = parse_estimator(r.get("estimator"), r.field("estimator"), opts);
    if (est.kind() == EstimatorKind::interval_combination && est.grid().front() != lambda) {
      fail(r.field("estimator") + ".grid", "must start at lambda");
    }
    spec = guarded(path, [&] { return ProcedureSpec::adaptive(alpha, lambda, est); });
  } else if (type == "quotient") {
    const double a = r.number("a");
    const double b = r.number("b");
    if (!(b >= 0.0)) fail(r.field("b"), "must be nonnegative");
    if (!quotient_parameters_valid(alpha, a, b)) {
      fail(r.field("a"),
           "quotient family needs 0 <= a <= 1 - alpha when b > 0 and 0 <= a < 1 - alpha when b = 0");
    }
    spec = ProcedureSpec::quotient(alpha, a, b);
  } else {
    fail(r.field("type"), "unknown procedure '" + type + "' (bh, adaptive, quotient)");
  }
  r.finish();
  return *spec;
}

ScenarioConfig parse_scenario(const Json& node, const std::string& path, std::uint64_t seed,
                              const ParseOptions& opts) {
  ObjectReader r(node, path, opts);
  ScenarioConfig s;
  s.m = r.count("m");
  s.m1 = r.count("m1");
  s.alt = r.has("alt") ? parse_alt(r.get("alt"), r.field("alt"), opts) : AltModel{DiracAlt{0.0}};
  s.seed = seed;
  r.finish();
  if (s.m == 0) fail(r.field("m"), "must be positive");
  if (s.m1 >= s.m) fail(r.field("m1"), "must be below m");
  return s;
}

// "x": {...} or "xs": [{...}, ...], exactly one of them.
template <class T, class F>
std::vector<T> parse_one_or_many(ObjectReader& top, const std::string& single, const std::string& plural, F&& parse) {
  const bool a = top.has(single), b = top.has(plural);
  if (a && b) fail(plural, "give either '" + single + "' or '" + plural + "', not both");
  if (!a && !b) fail(single, "missing");
  std::vector<T> out;
  if (a) {
    out.push_back(parse(top.get(single), single));
  } else {
    const Json& list = top.get(plural);
    if (!list.is_array() || list.empty()) fail(plural, "expected a nonempty array");
    for (std::size_t i = 0; i < list.size(); ++i) out.push_back(parse(list[i], plural + "[" + std::to_string(i) + "]"));
  }
  return out;
}

M1Rule parse_m1_rule(const Json& node, const std::string& path, const ParseOptions& opts) {
  ObjectReader r(node, path, opts);
  const std::string kind = r.text("kind");
  M1Rule rule;
  if (kind == "fixed") {
    rule.kind = M1RuleKind::fixed;
  } else if (kind == "proportional") {
    rule.kind = M1RuleKind::proportional;
  } else if (kind == "sqrt_scaled") {
    rule.kind = M1RuleKind::sqrt_scaled;
  } else {
    fail(r.field("kind"), "unknown m1 rule '" + kind + "' (fixed, proportional, sqrt_scaled)");
  }
  rule.value = r.number("value");
  r.finish();
  return rule;
}

SweepConfig parse_sweep(const Json& node, const std::string& path, const RunConfig& run, const ParseOptions& opts) {
  ObjectReader r(node, path, opts);
  SweepConfig cfg;
  cfg.m_grid = r.counts("m_grid");
  if (cfg.m_grid.empty()) fail(r.field("m_grid"), "must not be empty");
  for (std::size_t i = 0; i < cfg.m_grid.size(); ++i) {
    if (cfg.m_grid[i] == 0 || (i > 0 && cfg.m_grid[i] <= cfg.m_grid[i - 1])) {
      fail(r.field("m_grid"), "must be positive and strictly increasing");
    }
  }
  cfg.m1_rule = parse_m1_rule(r.get("m1_rule"), r.field("m1_rule"), opts);
  cfg.procedure = parse_procedure(r.get("procedure"), r.field("procedure"), opts);
  cfg.alt = r.has("alt") ? parse_alt(r.get("alt"), r.field("alt"), opts) : AltModel{DiracAlt{0.0}};
  cfg.replicates = run.replicates;
  cfg.seed = run.seed;
  r.finish();
  guarded(r.field("m1_rule"), [&] {
    validate_sweep(cfg);
    return 0;
  });
  return cfg;
}

LfcBlock parse_lfc(const Json& node, const std::string& path, const ParseOptions& opts) {
  ObjectReader r(node, path, opts);
  LfcBlock b;
  b.m = r.count("m");
  b.m1 = r.count("m1");
  if (b.m == 0) fail(r.field("m"), "must be positive");
  if (b.m1 >= b.m) fail(r.field("m1"), "must be below m");
  b.procedure = parse_procedure(r.get("procedure"), r.field("procedure"), opts);
  const Json& alts = r.get("alts");
  if (!alts.is_array() || alts.empty()) fail(r.field("alts"), "expected a nonempty array");
  for (std::size_t i = 0; i < alts.size(); ++i) {
    b.alts.push_back(parse_alt(alts[i], r.field("alts") + "[" + std::to_string(i) + "]", opts));
  }
  r.finish();
  return b;
}

CalibrationConfig parse_calibration(const Json& node, const std::string& path, const RunConfig& run,
                                    const ParseOptions& opts) {
  ObjectReader r(node, path, opts);
  CalibrationConfig c;
  c.m = r.count("m", c.m);
  c.b = r.number("b", c.b);
  c.alpha = r.number("alpha", c.alpha);
  c.tolerance = r.number("tolerance", c.tolerance);
  if (r.has("m1_grid")) c.m1_grid = r.counts("m1_grid");
  c.replicates = run.replicates;
  c.seed = run.seed;
  r.finish();
  if (c.m < 2) fail(r.field("m"), "must be at least 2");
  if (!(c.b > 0.0)) fail(r.field("b"), "must be positive");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) fail(r.field("alpha"), "must lie in (0,1)");
  if (!(c.tolerance > 0.0)) fail(r.field("tolerance"), "must be positive");
  for (std::size_t i = 0; i < c.m1_grid.size(); ++i) {
    if (c.m1_grid[i] == 0 || c.m1_grid[i] >= c.m) fail(r.field("m1_grid"), "entries must lie in [1, m)");
    if (i > 0 && c.m1_grid[i] <= c.m1_grid[i - 1]) fail(r.field("m1_grid"), "must be strictly increasing");
  }
  return c;
}

// Top-level keys and the commands that use them.
const std::vector<std::pair<std::string, std::vector<Command>>>& block_owners() {
  using C = Command;
  static const std::vector<std::pair<std::string, std::vector<Command>>> owners{
      {"scenario", {C::verify_moments, C::fdr_table}},
      {"scenarios", {C::verify_moments, C::fdr_table}},
      {"procedure", {C::verify_moments, C::fdr_table}},
      {"procedures", {C::verify_moments, C::fdr_table}},
      {"identities", {C::verify_moments}},
      {"bounds", {C::verify_moments}},
      {"rhs_scale", {C::verify_moments}},
      {"sweep", {C::consistency_sweep, C::diagnostics_quotient}},
      {"level_probe", {C::consistency_sweep}},
      {"lfc", {C::lfc_check}},
      {"calibration", {C::calibrate_aorc}},
  };
  return owners;
}

}  // namespace

std::string_view command_name(Command c) {
  for (const auto& [cmd, name] : kCommands) {
    if (cmd == c) return name;
  }
  return "?";
}

Command command_from_name(std::string_view name) {
  for (const auto& [cmd, n] : kCommands) {
    if (n == name) return cmd;
  }
  fail("command", "unknown command '" + std::string(name) + "'");
}

ConfigError::ConfigError(ConfigErrorCode code, std::string field, const std::string& detail)
    : std::runtime_error(std::string(error_tag(code)) + ": " + field + ": " + detail),
      code_(code),
      field_(std::move(field)) {}

std::string_view error_tag(ConfigErrorCode code) {
  switch (code) {
    case ConfigErrorCode::parse:
      return "E_PARSE";
    case ConfigErrorCode::validate:
      return "E_VALIDATE";
    case ConfigErrorCode::unknown_key:
      return "E_UNKNOWN_KEY";
  }
  return "E_?";
}

RunConfig parse_config(std::string_view text, const ParseOptions& options) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(ConfigErrorCode::parse, "(document)", e.what());
  }
  return parse_config(doc, options);
}

RunConfig parse_config(const Json& document, const ParseOptions& options) {
  ObjectReader top(document, "", options);
  RunConfig cfg;
  cfg.command = command_from_name(top.text("command"));
  cfg.seed = top.count("seed", 0);
  cfg.replicates = top.count("replicates");
  if (cfg.replicates < 100) fail("replicates", "must be at least 100");
  cfg.workers = top.count("workers", 1);

  if (top.has("output")) {
    ObjectReader out(top.get("output"), "output", options);
    if (out.has("path")) cfg.output_path = out.text("path");
    if (out.has("format")) {
      const std::string f = out.text("format");
      if (f == "csv") {
        cfg.format = OutputFormat::csv;
      } else if (f == "json") {
        cfg.format = OutputFormat::json;
      } else {
        fail("output.format", "must be csv or json");
      }
    }
    out.finish();
  }

  for (const auto& [key, users] : block_owners()) {
    if (!top.has(key)) continue;
    if (std::find(users.begin(), users.end(), cfg.command) == users.end()) {
      fail(key, "not used by " + std::string(command_name(cfg.command)));
    }
  }

  switch (cfg.command) {
    case Command::verify_moments:
    case Command::fdr_table: {
      cfg.scenarios = parse_one_or_many<ScenarioConfig>(top, "scenario", "scenarios",
                                                         [&](const Json& n, const std::string& p) {
                                                           return parse_scenario(n, p, cfg.seed, options);
                                                         });
      cfg.procedures = parse_one_or_many<ProcedureSpec>(
          top, "procedure", "procedures",
          [&](const Json& n, const std::string& p) { return parse_procedure(n, p, options); });
      if (cfg.command == Command::verify_moments) {
        if (top.has("identities")) {
          const Json& ids = top.get("identities");
          if (!ids.is_array() || ids.empty()) fail("identities", "expected a nonempty array of names");
          for (const auto& id : ids) {
            if (!id.is_string()) fail("identities", "expected a nonempty array of names");
            cfg.identities.push_back(
                guarded("identities", [&] { return identity_from_name(id.get<std::string>()); }));
          }
          for (Identity id : cfg.identities) {
            for (const auto& p : cfg.procedures) {
              if (!identity_applies(id, p)) fail("identities", identity_name(id) + " does not apply to " + p.label());
            }
          }
        }
        cfg.bounds = top.flag("bounds", false);
        cfg.rhs_scale = top.number("rhs_scale", 1.0);
        if (!(cfg.rhs_scale > 0.0)) fail("rhs_scale", "must be positive");
      }
      break;
    }
    case Command::consistency_sweep:
    case Command::diagnostics_quotient:
      cfg.sweep = parse_sweep(top.get("sweep"), "sweep", cfg, options);
      if (cfg.command == Command::diagnostics_quotient && cfg.sweep->procedure.is_adaptive()) {
        fail("sweep.procedure.type", "diagnostics-quotient needs deterministic critical values (quotient or bh)");
      }
      if (top.has("level_probe")) {
        ObjectReader lp(top.get("level_probe"), "level_probe", options);
        LevelProbeBlock b{lp.number("alpha_lo"), lp.number("alpha_hi")};
        lp.finish();
        if (!(b.alpha_lo > 0.0 && b.alpha_lo < b.alpha_hi && b.alpha_hi < 1.0)) {
          fail("level_probe", "need 0 < alpha_lo < alpha_hi < 1");
        }
        cfg.level_probe = b;
      }
      break;
    case Command::lfc_check:
      cfg.lfc = parse_lfc(top.get("lfc"), "lfc", options);
      break;
    case Command::calibrate_aorc:
      cfg.calibration = parse_calibration(top.get("calibration"), "calibration", cfg, options);
      break;
  }
  top.finish();

  cfg.echo = Json::object();
  cfg.echo["command"] = document.at("command");
  cfg.echo["replicates"] = cfg.replicates;
  for (const auto& [key, users] : block_owners()) {
    if (document.contains(key)) cfg.echo[key] = document.at(key);
  }
  // defaults that change the numbers are spelled out
  cfg.echo["seed"] = cfg.seed;
  return cfg;
}

}  // namespace fdplab::cli
