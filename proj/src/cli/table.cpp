#include "fdplab/cli/table.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace fdplab::cli {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_text(const Cell& cell) {
  struct Visitor {
    std::string operator()(std::uint64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& v) const { return csv_field(v); }
  };
  return std::visit(Visitor{}, cell);
}

Json cell_json(const Cell& cell) {
  struct Visitor {
    Json operator()(std::uint64_t v) const { return v; }
    Json operator()(double v) const { return std::isfinite(v) ? Json(v) : Json(nullptr); }
    Json operator()(bool v) const { return v; }
    Json operator()(const std::string& v) const { return v; }
  };
  return std::visit(Visitor{}, cell);
}

Cell json_cell(const Json& v) {
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  throw std::invalid_argument("table: unsupported cell value " + v.dump());
}

void write_json_file(const std::string& path, const Json& doc) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << doc.dump(2) << '\n';
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw std::invalid_argument("table: row has " + std::to_string(row.size()) + " cells, expected " +
                                std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

Table sweep_table(const std::vector<SweepRow>& rows) {
  Table t;
  t.columns = {"m",         "m1",      "fdr_mean", "fdr_se", "var_fdp_mean", "var_fdp_se",
               "p_v0_mean", "p_v0_se", "mean_r",   "m0hat_over_m", "pass"};
  for (const auto& r : rows) {
    t.add_row({std::uint64_t{r.m}, std::uint64_t{r.m1}, r.fdr.mean, r.fdr.se, r.var_fdp.mean, r.var_fdp.se,
               r.p_v0.mean, r.p_v0.se, r.mean_r.mean, r.mean_m0hat_over_m.mean, r.pass});
  }
  return t;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv(std::ostream& out, const Table& table) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out << (i ? "," : "") << csv_field(table.columns[i]);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell_text(row[i]);
    out << '\n';
  }
}

Json table_json(const Table& table, const Json& metadata) {
  Json doc = Json::object();
  doc["metadata"] = metadata;
  doc["columns"] = table.columns;
  Json rows = Json::array();
  for (const auto& row : table.rows) {
    Json obj = Json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[table.columns[i]] = cell_json(row[i]);
    rows.push_back(std::move(obj));
  }
  doc["rows"] = std::move(rows);
  return doc;
}

Table read_table_json(const Json& document, Json* metadata) {
  if (!document.is_object() || !document.contains("columns") || !document.contains("rows")) {
    throw std::invalid_argument("table: expected an object with columns and rows");
  }
  Table t;
  t.columns = document.at("columns").get<std::vector<std::string>>();
  for (const auto& obj : document.at("rows")) {
    std::vector<Cell> row;
    for (const auto& col : t.columns) row.push_back(json_cell(obj.at(col)));
    t.add_row(std::move(row));
  }
  if (metadata != nullptr) *metadata = document.value("metadata", Json::object());
  return t;
}

void emit_table(const Table& table, const Json& metadata, OutputFormat format, const std::string& path) {
  if (format == OutputFormat::json) {
    const Json doc = table_json(table, metadata);
    if (path.empty()) {
      std::cout << doc.dump(2) << '\n';
    } else {
      write_json_file(path, doc);
    }
    return;
  }
  if (path.empty()) {
    write_csv(std::cout, table);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(f, table);
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
  write_json_file(path + ".meta.json", metadata);
}

}  // namespace fdplab::cli
