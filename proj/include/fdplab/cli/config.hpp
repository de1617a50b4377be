#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fdplab/simulation.hpp"

namespace fdplab::cli {

using Json = nlohmann::ordered_json;

enum class Command { verify_moments, fdr_table, consistency_sweep, lfc_check, calibrate_aorc, diagnostics_quotient };

std::string_view command_name(Command c);
/// Throws ConfigError(E_VALIDATE) on an unknown name.
Command command_from_name(std::string_view name);

enum class OutputFormat { csv, json };

enum class ConfigErrorCode { parse, validate, unknown_key };

class ConfigError : public std::runtime_error {
public:
  ConfigError(ConfigErrorCode code, std::string field, const std::string& detail);
  ConfigErrorCode code() const noexcept { return code_; }
  /// Dotted path of the offending key, e.g. "procedure.a".
  const std::string& field() const noexcept { return field_; }

private:
  ConfigErrorCode code_;
  std::string field_;
};

std::string_view error_tag(ConfigErrorCode code);  // "E_PARSE", ...

struct LfcBlock {
  std::size_t m = 0;
  std::size_t m1 = 0;
  ProcedureSpec procedure = ProcedureSpec::bh(0.05);
  std::vector<AltModel> alts;
};

struct LevelProbeBlock {
  double alpha_lo = 0.0;
  double alpha_hi = 0.0;
};

struct RunConfig {
  Command command = Command::verify_moments;
  std::uint64_t seed = 0;
  std::size_t replicates = 0;
  std::size_t workers = 1;
  std::string output_path;  // empty: standard output
  OutputFormat format = OutputFormat::csv;

  // verify-moments, fdr-table
  std::vector<ScenarioConfig> scenarios;
  std::vector<ProcedureSpec> procedures;
  std::vector<Identity> identities;  // empty: every identity that applies
  bool bounds = false;
  double rhs_scale = 1.0;

  std::optional<SweepConfig> sweep;  // consistency-sweep, diagnostics-quotient
  std::optional<LevelProbeBlock> level_probe;
  std::optional<LfcBlock> lfc;
  std::optional<CalibrationConfig> calibration;

  /// The validated document without `workers` and `output`: everything that
  /// determines the numbers.
  Json echo;
};

struct ParseOptions {
  bool strict = true;  // unknown keys are errors
  std::vector<std::string>* ignored = nullptr;  // receives unknown keys in lenient mode
};

RunConfig parse_config(std::string_view text, const ParseOptions& options = {});
RunConfig parse_config(const Json& document, const ParseOptions& options = {});

}  // namespace fdplab::cli
