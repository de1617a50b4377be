#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fdplab/cli/execute.hpp"

using namespace fdplab;
using namespace fdplab::cli;

namespace {

const char* kMinimal = R"({
  "command": "verify-moments",
  "replicates": 200,
  "scenario": {"m": 40, "m1": 10, "alt": {"type": "dirac", "c": 0}},
  "procedure": {"type": "adaptive", "alpha": 0.1, "lambda": 0.5}
})";

Json minimal() { return Json::parse(kMinimal); }

ConfigError parse_error(const Json& doc, const ParseOptions& opts = {}) {
  try {
    parse_config(doc, opts);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no ConfigError";
  return ConfigError(ConfigErrorCode::parse, "", "");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("fdplab_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

SweepRow sample_row(std::size_t m) {
  SweepRow r;
  r.m = m;
  r.m1 = m / 2;
  r.fdr = {0.1 / 3.0, 0.0, 1e-3 / 7.0, 10};
  r.var_fdp = {2.0 / 3.0, 0.0, 1e-17, 10};
  r.p_v0 = {0.5, 0.0, 0.25, 10};
  r.mean_r = {12.0, 0.0, 0.0, 10};
  r.mean_m0hat_over_m = {0.30000000000000004, 0.0, 0.0, 10};
  r.pass = m % 2 == 0;
  return r;
}

}  // namespace

TEST(ParseConfig, MinimalVerifyMoments) {
  const RunConfig c = parse_config(std::string_view(kMinimal));
  EXPECT_EQ(c.command, Command::verify_moments);
  EXPECT_EQ(c.replicates, 200u);
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.workers, 1u);
  ASSERT_EQ(c.scenarios.size(), 1u);
  EXPECT_EQ(c.scenarios[0].m0(), 30u);
  ASSERT_EQ(c.procedures.size(), 1u);
  EXPECT_TRUE(c.procedures[0].is_adaptive());
  EXPECT_EQ(c.procedures[0].adaptive_family().estimator.kind(), EstimatorKind::storey);
  EXPECT_TRUE(c.identities.empty());
  EXPECT_TRUE(c.output_path.empty());
}

TEST(ParseConfig, QuotientBoundaryWithoutOffsetIsRejected) {
  Json d = minimal();
  d["procedure"] = {{"type", "quotient"}, {"alpha", 0.1}, {"a", 0.9}, {"b", 0}};
  const auto e = parse_error(d);
  EXPECT_EQ(e.code(), ConfigErrorCode::validate);
  EXPECT_EQ(e.field(), "procedure.a");
  EXPECT_NE(std::string(e.what()).find("E_VALIDATE"), std::string::npos);
  d["procedure"]["b"] = 1;
  EXPECT_NO_THROW(parse_config(d));
}

TEST(ParseConfig, WeightsMustSumToOne) {
  Json d = minimal();
  d["procedure"]["estimator"] = {{"type", "combination"}, {"grid", {0.5, 0.75, 1.0}}, {"weights", {0.5, 0.6}}};
  const auto e = parse_error(d);
  EXPECT_EQ(e.code(), ConfigErrorCode::validate);
  EXPECT_EQ(e.field(), "procedure.estimator.weights");
  EXPECT_NE(std::string(e.what()).find("sum"), std::string::npos);
  d["procedure"]["estimator"]["weights"] = {0.4, 0.6};
  EXPECT_NO_THROW(parse_config(d));
  d["procedure"]["estimator"]["grid"] = {0.5, 0.9, 0.8, 1.0};
  EXPECT_EQ(parse_error(d).field(), "procedure.estimator.grid");
  d["procedure"]["estimator"] = {{"type", "nested_tail"}, {"grid", {0.6, 1.0}}};
  EXPECT_EQ(parse_error(d).field(), "procedure.estimator.grid");
}

TEST(ParseConfig, MalformedDocument) {
  try {
    parse_config(std::string_view("{\"command\": \"verify-moments\", "));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.code(), ConfigErrorCode::parse);
    EXPECT_NE(std::string(e.what()).find("E_PARSE"), std::string::npos);
  }
}

TEST(ParseConfig, UnknownKeysStrictAndLenient) {
  Json d = minimal();
  d["scenario"]["mm"] = 3;
  const auto e = parse_error(d);
  EXPECT_EQ(e.code(), ConfigErrorCode::unknown_key);
  EXPECT_EQ(e.field(), "scenario.mm");
  std::vector<std::string> ignored;
  EXPECT_NO_THROW(parse_config(d, ParseOptions{false, &ignored}));
  EXPECT_EQ(ignored, std::vector<std::string>{"scenario.mm"});
  d.erase("scenario");
  d["scenario"] = minimal()["scenario"];
  d["colour"] = "red";
  EXPECT_EQ(parse_error(d).field(), "colour");
}

TEST(ParseConfig, InvariantsNameTheField) {
  Json d = minimal();
  d["replicates"] = 99;
  EXPECT_EQ(parse_error(d).field(), "replicates");
  d = minimal();
  d["scenario"]["m1"] = 40;
  EXPECT_EQ(parse_error(d).field(), "scenario.m1");
  d = minimal();
  d["procedure"]["lambda"] = 0.05;
  EXPECT_EQ(parse_error(d).field(), "procedure.lambda");
  d = minimal();
  d["command"] = "make-coffee";
  EXPECT_EQ(parse_error(d).field(), "command");
  d = minimal();
  d["identities"] = {"deterministic_k1"};
  EXPECT_EQ(parse_error(d).field(), "identities");
  d["identities"] = {"moment_7"};
  EXPECT_EQ(parse_error(d).field(), "identities");
  d = minimal();
  d["scenario"]["alt"] = {{"type", "uniform"}, {"upper", 0}};
  EXPECT_EQ(parse_error(d).field(), "scenario.alt");
  d = minimal();
  d["output"] = {{"format", "xml"}};
  EXPECT_EQ(parse_error(d).field(), "output.format");
}

TEST(ParseConfig, ExactlyTheCommandsBlocks) {
  Json d = minimal();
  d["calibration"] = {{"m", 50}};
  EXPECT_EQ(parse_error(d).field(), "calibration");
  d = minimal();
  d["scenarios"] = {d["scenario"]};
  EXPECT_EQ(parse_error(d).field(), "scenarios");
  d = minimal();
  d.erase("procedure");
  EXPECT_EQ(parse_error(d).field(), "procedure");
}

TEST(ParseConfig, SweepBlock) {
  Json d = {{"command", "consistency-sweep"},
            {"replicates", 100},
            {"seed", 4},
            {"sweep",
             {{"m_grid", {100, 50}},
              {"m1_rule", {{"kind", "proportional"}, {"value", 0.5}}},
              {"procedure", {{"type", "bh"}, {"alpha", 0.1}}}}}};
  EXPECT_EQ(parse_error(d).field(), "sweep.m_grid");
  d["sweep"]["m_grid"] = {50, 100};
  const RunConfig c = parse_config(d);
  ASSERT_TRUE(c.sweep.has_value());
  EXPECT_EQ(c.sweep->seed, 4u);
  EXPECT_EQ(c.sweep->replicates, 100u);
  d["sweep"]["m1_rule"]["value"] = 1.5;
  EXPECT_EQ(parse_error(d).field(), "sweep.m1_rule");
  d["sweep"]["m1_rule"] = {{"kind", "fixed"}, {"value", 3}};
  d["command"] = "diagnostics-quotient";
  d["sweep"]["procedure"] = {{"type", "adaptive"}, {"alpha", 0.1}, {"lambda", 0.5}};
  EXPECT_EQ(parse_error(d).field(), "sweep.procedure.type");
}

TEST(ParseConfig, CalibrationAndLfcBlocks) {
  Json d = {{"command", "calibrate-aorc"}, {"replicates", 1000}, {"calibration", {{"m", 20}, {"m1_grid", {1, 20}}}}};
  EXPECT_EQ(parse_error(d).field(), "calibration.m1_grid");
  d["calibration"]["m1_grid"] = {1, 10};
  EXPECT_EQ(parse_config(d).calibration->m1_grid, (std::vector<std::size_t>{1, 10}));

  Json l = {{"command", "lfc-check"},
            {"replicates", 1000},
            {"lfc",
             {{"m", 20},
              {"m1", 5},
              {"procedure", {{"type", "bh"}, {"alpha", 0.1}}},
              {"alts", {{{"type", "piecewise_linear"}, {"knots", {{0, 0}, {0.2, 0.5}, {1, 1}}}}}}}}};
  const RunConfig c = parse_config(l);
  ASSERT_EQ(c.lfc->alts.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<PiecewiseLinearAlt>(c.lfc->alts[0]));
}

TEST(ParseConfig, EchoLeavesOutWorkersAndOutput) {
  Json d = minimal();
  d["workers"] = 4;
  d["output"] = {{"path", "x.csv"}};
  const RunConfig c = parse_config(d);
  EXPECT_EQ(c.workers, 4u);
  EXPECT_FALSE(c.echo.contains("workers"));
  EXPECT_FALSE(c.echo.contains("output"));
  EXPECT_EQ(c.echo["seed"], 0);
  EXPECT_EQ(c.echo["scenario"], d["scenario"]);
}

TEST(Table, SeventeenDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Table, EmptySweepIsHeaderOnly) {
  std::ostringstream out;
  write_csv(out, sweep_table({}));
  EXPECT_EQ(out.str(),
            "m,m1,fdr_mean,fdr_se,var_fdp_mean,var_fdp_se,p_v0_mean,p_v0_se,mean_r,m0hat_over_m,pass\n");
}

TEST(Table, OneRowIsTwoLines) {
  std::ostringstream out;
  write_csv(out, sweep_table({sample_row(10)}));
  const std::string s = out.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 2);
  EXPECT_NE(s.find("\n10,5,0.033333333333333333,"), std::string::npos);
  EXPECT_EQ(s.substr(s.size() - 6), ",true\n");
}

TEST(Table, CsvQuotesOnlyWhenNeeded) {
  Table t;
  t.columns = {"a", "b"};
  t.add_row({std::string("x,y"), std::string("say \"hi\"")});
  std::ostringstream out;
  write_csv(out, t);
  EXPECT_EQ(out.str(), "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
  EXPECT_THROW(t.add_row({true}), std::invalid_argument);
}

TEST(Table, JsonRoundTrip) {
  const Table t = sweep_table({sample_row(10), sample_row(21)});
  Json meta = {{"seed", 3}, {"replicates", 100}};
  const std::string text = table_json(t, meta).dump(2);
  Json back_meta;
  const Table back = read_table_json(Json::parse(text), &back_meta);
  EXPECT_EQ(back, t);
  EXPECT_EQ(back_meta, meta);
  EXPECT_EQ(read_table_json(Json::parse(table_json(sweep_table({}), meta).dump())), sweep_table({}));
}

TEST(Table, JsonRoundTripOfRealSweep) {
  SweepConfig c;
  c.m_grid = {30, 60};
  c.m1_rule = {M1RuleKind::proportional, 0.3};
  c.procedure = ProcedureSpec::adaptive(0.1, 0.5, EstimatorSpec::storey());
  c.alt = UniformAlt{0.2};
  c.replicates = 500;
  const Table t = sweep_table(consistency_sweep(c));
  EXPECT_EQ(read_table_json(Json::parse(table_json(t, Json::object()).dump())), t);
}

TEST(Execute, MissingOutputDirectoryIsAnError) {
  RunConfig c = parse_config(minimal());
  c.output_path = "/nonexistent-fdplab-dir/out.csv";
  std::ostringstream err;
  EXPECT_EQ(execute(c, err), kExitError);
  EXPECT_NE(err.str().find("does not exist"), std::string::npos);
}

TEST(Execute, WritesCsvWithMetadataSidecar) {
  TempDir dir;
  Json d = minimal();
  d["seed"] = 5;
  d["replicates"] = 2000;
  d["output"] = {{"path", (dir.path / "m.csv").string()}};
  std::ostringstream err;
  EXPECT_EQ(execute(parse_config(d), err), kExitOk) << err.str();
  const std::string csv = slurp(dir.path / "m.csv");
  EXPECT_EQ(csv.rfind("procedure,alt,m,m1,check,lhs,rhs,diff,se,z,lower_margin,upper_margin,pass\n", 0), 0u);
  const Json meta = Json::parse(slurp(dir.path / "m.csv.meta.json"));
  EXPECT_EQ(meta["seed"], 5);
  EXPECT_EQ(meta["replicates"], 2000);
  EXPECT_EQ(meta["command"], "verify-moments");
  EXPECT_TRUE(meta.contains("version"));
  EXPECT_EQ(meta["config"]["scenario"], d["scenario"]);
}

TEST(Execute, FaultInjectionExitsTwo) {
  TempDir dir;
  Json d = minimal();
  d["scenario"] = {{"m", 200}, {"m1", 80}};
  d["replicates"] = 100000;
  d["identities"] = {"fdr"};
  d["rhs_scale"] = 1.05;
  d["output"] = {{"path", (dir.path / "f.json").string()}, {"format", "json"}};
  std::ostringstream err;
  EXPECT_EQ(execute(parse_config(d), err), kExitCheckFailed);
  const Table t = read_table_json(Json::parse(slurp(dir.path / "f.json")));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(std::get<bool>(t.rows[0].back()), false);
}

TEST(Execute, OutputBytesDoNotDependOnWorkers) {
  TempDir dir;
  Json d = minimal();
  d["replicates"] = 5000;
  d["bounds"] = true;
  std::string text[2];
  for (int w = 0; w < 2; ++w) {
    d["workers"] = w + 1;
    d["output"] = {{"path", (dir.path / ("w" + std::to_string(w) + ".json")).string()}, {"format", "json"}};
    std::ostringstream err;
    const int code = execute(parse_config(d), err);
    EXPECT_NE(code, kExitError) << err.str();
    text[w] = slurp(dir.path / ("w" + std::to_string(w) + ".json"));
  }
  EXPECT_FALSE(text[0].empty());
  EXPECT_EQ(text[0], text[1]);
}

TEST(Execute, EveryCommandRuns) {
  const std::vector<Json> docs{
      {{"command", "fdr-table"},
       {"replicates", 300},
       {"scenarios", {{{"m", 30}, {"m1", 0}}, {{"m", 30}, {"m1", 10}}}},
       {"procedure", {{"type", "bh"}, {"alpha", 0.1}}}},
      {{"command", "consistency-sweep"},
       {"replicates", 300},
       {"sweep",
        {{"m_grid", {20, 40}},
         {"m1_rule", {{"kind", "fixed"}, {"value", 3}}},
         {"procedure", {{"type", "bh"}, {"alpha", 0.1}}}}},
       {"level_probe", {{"alpha_lo", 0.05}, {"alpha_hi", 0.2}}}},
      {{"command", "diagnostics-quotient"},
       {"replicates", 300},
       {"sweep",
        {{"m_grid", {20, 40}},
         {"m1_rule", {{"kind", "sqrt_scaled"}, {"value", 1}}},
         {"procedure", {{"type", "quotient"}, {"alpha", 0.05}, {"a", 0.5}, {"b", 1}}}}}},
      {{"command", "lfc-check"},
       {"replicates", 300},
       {"lfc",
        {{"m", 30},
         {"m1", 0},
         {"procedure", {{"type", "adaptive"}, {"alpha", 0.1}, {"lambda", 0.5}}},
         {"alts", {{{"type", "uniform"}, {"upper", 0.5}}}}}}},
  };
  for (const auto& d : docs) {
    const RunConfig c = parse_config(d);
    const CommandResult r = run_command(c);
    EXPECT_FALSE(r.table.columns.empty()) << d["command"];
    EXPECT_FALSE(r.table.rows.empty()) << d["command"];
    const Json meta = make_metadata(c, r);
    EXPECT_EQ(meta["command"], d["command"]);
  }
}
