#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "fdplab/cli/config.hpp"
#include "fdplab/simulation.hpp"

namespace fdplab::cli {

using Cell = std::variant<std::uint64_t, double, bool, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);  // throws when the width is wrong
  bool operator==(const Table&) const = default;
};

/// m, m1, fdr_mean, fdr_se, var_fdp_mean, var_fdp_se, p_v0_mean, p_v0_se,
/// mean_r, m0hat_over_m, pass
Table sweep_table(const std::vector<SweepRow>& rows);

std::string format_double(double x);  // %.17g

void write_csv(std::ostream& out, const Table& table);
Json table_json(const Table& table, const Json& metadata);

/// Inverse of table_json: returns the table and stores the metadata.
Table read_table_json(const Json& document, Json* metadata = nullptr);

/// Writes `path` (or standard output when empty). CSV metadata goes to
/// `<path>.meta.json`. Throws std::runtime_error on I/O failure.
void emit_table(const Table& table, const Json& metadata, OutputFormat format, const std::string& path);

}  // namespace fdplab::cli
