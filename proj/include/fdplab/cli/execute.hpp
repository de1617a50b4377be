#pragma once

#include <iosfwd>

#include "fdplab/cli/config.hpp"
#include "fdplab/cli/table.hpp"

namespace fdplab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCheckFailed = 2;

struct CommandResult {
  Table table;
  Json diagnostics = Json::object();
  bool all_pass = true;
};

/// Runs the simulation behind the command; no I/O.
CommandResult run_command(const RunConfig& config);

/// seed, replicates, version, command, config echo, diagnostics
Json make_metadata(const RunConfig& config, const CommandResult& result);

/// run_command + emit_table. 0 when every check passed, 2 when one failed,
/// 1 on any error (reported on `err`).
int execute(const RunConfig& config, std::ostream& err);

}  // namespace fdplab::cli
