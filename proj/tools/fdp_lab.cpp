#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "fdplab/cli/execute.hpp"

using namespace fdplab::cli;

int main(int argc, char** argv) {
  CLI::App app{"Monte-Carlo checks for adaptive step-up multiple tests"};
  std::string command, config_path, out, format;
  std::optional<std::uint64_t> seed, replicates, workers;
  bool lenient = false;
  app.add_option("command", command, "verify-moments | fdr-table | consistency-sweep | lfc-check | "
                                     "calibrate-aorc | diagnostics-quotient")
      ->required();
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--seed", seed);
  app.add_option("--replicates", replicates);
  app.add_option("--workers", workers, "0 = all hardware threads");
  app.add_option("--out", out, "output file (default: standard output)");
  app.add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--lenient", lenient, "ignore unknown config keys instead of failing");
  app.set_version_flag("--version", FDPLAB_VERSION);
  CLI11_PARSE(app, argc, argv);

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "fdp-lab: cannot read config '" << config_path << "'\n";
    return kExitError;
  }
  std::stringstream text;
  text << in.rdbuf();

  Json doc;
  try {
    doc = Json::parse(text.str());
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "fdp-lab: E_PARSE: " << config_path << ": " << e.what() << '\n';
    return kExitError;
  }
  if (!doc.is_object()) {
    std::cerr << "fdp-lab: E_PARSE: " << config_path << ": top level must be an object\n";
    return kExitError;
  }
  // command-line values win over the file; validation then sees the merged document
  if (doc.contains("command") && doc["command"] != command) {
    std::cerr << "fdp-lab: E_VALIDATE: command: config says " << doc["command"].dump() << ", command line says "
              << command << '\n';
    return kExitError;
  }
  doc["command"] = command;
  if (seed) doc["seed"] = *seed;
  if (replicates) doc["replicates"] = *replicates;
  if (workers) doc["workers"] = *workers;
  if (!out.empty() || !format.empty()) {
    if (!doc.contains("output") || !doc["output"].is_object()) doc["output"] = Json::object();
    if (!out.empty()) doc["output"]["path"] = out;
    if (!format.empty()) doc["output"]["format"] = format;
  }

  RunConfig cfg;
  std::vector<std::string> ignored;
  try {
    cfg = parse_config(doc, ParseOptions{!lenient, &ignored});
  } catch (const ConfigError& e) {
    std::cerr << "fdp-lab: " << e.what() << '\n';
    return kExitError;
  }
  for (const auto& key : ignored) std::cerr << "fdp-lab: warning: ignoring unknown key " << key << '\n';
  return execute(cfg, std::cerr);
}
