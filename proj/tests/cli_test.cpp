#include "knaphedge/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

namespace knaphedge::cli {
namespace {

using nlohmann::json;

json one_period_doc() {
  return json::parse(R"({
    "model": {"binomial": {"s0": 100, "u": 1.2, "d": 0.8, "r": 0, "p": 0.6, "N": 1}},
    "claim": {"type": "call", "strike": 100},
    "budget": {"v": 5}
  })");
}

Report run_doc(json doc, const std::string& problem, const std::string& mode = "greedy") {
  doc["problem"] = problem;
  doc["mode"] = mode;
  return run(parse_config(doc));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_hedge(const std::string& args) {
  const std::string cmd = std::string(HEDGE_BINARY) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(ParseConfig, AcceptsMinimalBinomialDocument) {
  const RunConfig c = parse_config(one_period_doc());
  const auto& params = std::get<market::BinomialParams>(c.model);
  EXPECT_EQ(params.periods, 1);
  EXPECT_EQ(c.claim.type, market::OptionType::call);
  EXPECT_EQ(c.budget.value, 5.0);
  EXPECT_EQ(c.problem, Problem::a);
  EXPECT_EQ(c.mode, Mode::greedy);
}

TEST(ParseConfig, RejectsMalformedDocuments) {
  json unknown = one_period_doc();
  unknown["colour"] = "red";
  EXPECT_THROW(parse_config(unknown), ConfigError);

  json both = one_period_doc();
  both["budget"]["alpha"] = 0.5;
  EXPECT_THROW(parse_config(both), ConfigError);

  json missing = one_period_doc();
  missing.erase("claim");
  EXPECT_THROW(parse_config(missing), ConfigError);

  json periods = one_period_doc();
  periods["model"]["binomial"]["N"] = kMaxBinomialPeriods + 1;
  EXPECT_THROW(parse_config(periods), ConfigError);

  json fraction = one_period_doc();
  fraction["budget"] = json{{"alpha", 1.0}};
  EXPECT_THROW(parse_config(fraction), ConfigError);

  json type = one_period_doc();
  type["claim"]["type"] = "straddle";
  EXPECT_THROW(parse_config(type), ConfigError);

  EXPECT_THROW(parse_problem("e"), ConfigError);
  EXPECT_THROW(parse_mode("fast"), ConfigError);
}

TEST(ParseConfig, TableModelWithPayoff) {
  const RunConfig c = parse_config(json::parse(R"({
    "model": {"table": {"p": [0.6, 0.4], "p_star": [0.5, 0.5]}},
    "claim": {"payoff": [20, 0]},
    "budget": {"alpha": 0.5},
    "problem": "d"
  })"));
  const Report r = run(c);
  EXPECT_NEAR(r.objective, 4.0, 1e-9);
  EXPECT_FALSE(r.replication_available);
  EXPECT_EQ(r.sacrificed_state, 2u);
}

TEST(Run, OnePeriodReports) {
  const json doc = one_period_doc();
  const Report a = run_doc(doc, "a");
  EXPECT_NEAR(a.objective, 0.4, 1e-9);
  EXPECT_NEAR(*a.bound_dantzig, 0.7, 1e-9);
  EXPECT_NEAR(*a.error_bound, 0.6, 1e-9);
  EXPECT_EQ(a.critical_state, 1u);
  EXPECT_NEAR(a.price, 10.0, 1e-9);
  EXPECT_NEAR(a.alpha, 0.5, 1e-9);

  const Report exact = run_doc(doc, "a", "exact");
  EXPECT_NEAR(*exact.bound_exact, 0.4, 1e-9);

  EXPECT_NEAR(run_doc(doc, "a-rand").objective, 0.7, 1e-9);
  const Report b = run_doc(doc, "b");
  EXPECT_NEAR(b.objective, 0.6, 1e-9);
  EXPECT_NEAR(*b.sacrificed_value, -10.0, 1e-9);
  EXPECT_NEAR(run_doc(doc, "c").objective, 6.0, 1e-9);
  const Report d = run_doc(doc, "d");
  EXPECT_NEAR(d.objective, 4.0, 1e-9);
  EXPECT_NEAR(d.initial_cost, 5.0, 1e-9);
  ASSERT_EQ(d.states.size(), 2u);
  EXPECT_NEAR(d.states[1].v_terminal, -10.0, 1e-9);
  EXPECT_FALSE(d.states[1].success);
  EXPECT_TRUE(d.states[0].success);
}

TEST(Run, OracleAndLevels) {
  json doc = one_period_doc();
  doc["model"]["binomial"]["N"] = 4;
  doc["oracle"] = true;
  const Report exact = run_doc(doc, "a", "exact");
  ASSERT_TRUE(exact.oracle_z.has_value());
  EXPECT_EQ(*exact.oracle_z, exact.objective);

  doc["oracle"] = false;
  doc["levels"] = true;
  const Report grouped = run_doc(doc, "a");
  doc["levels"] = false;
  EXPECT_EQ(grouped.objective, run_doc(doc, "a").objective);
  EXPECT_TRUE(grouped.levels_used);

  doc["levels"] = true;
  EXPECT_THROW(run_doc(doc, "c"), ConfigError);
}

TEST(Run, BudgetAtPerfectPriceIsRejected) {
  json doc = one_period_doc();
  doc["budget"]["v"] = 10;
  try {
    run_doc(doc, "a");
    FAIL() << "expected rejection";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("budget must be strictly below the perfect-hedge price"),
              std::string::npos);
    EXPECT_EQ(exit_code_for(e), ExitCode::config);
  }
}

TEST(Run, ErrorsMapToExitCodes) {
  json arb = one_period_doc();
  arb["model"]["binomial"]["d"] = 1.05;
  arb["model"]["binomial"]["u"] = 1.1;
  arb["model"]["binomial"]["r"] = 0.2;
  try {
    run(parse_config(arb));
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_EQ(exit_code_for(e), ExitCode::model);
  }
  json zero = one_period_doc();
  zero["claim"]["strike"] = 500;
  try {
    run(parse_config(zero));
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_EQ(exit_code_for(e), ExitCode::degenerate_claim);
  }
}

TEST(Output, JsonKeysAndCsvHeader) {
  const Report r = run_doc(one_period_doc(), "a");
  const auto doc = to_json(r, false);
  std::vector<std::string> keys;
  for (const auto& [key, value] : doc.items()) keys.push_back(key);
  const std::vector<std::string> expected{
      "problem", "mode", "price", "budget", "alpha", "objective", "bounds", "initial_cost",
      "success_probability", "expected_shortfall", "critical_state", "sacrificed_state",
      "sacrificed_value", "optimal", "replication_available", "levels_used", "states"};
  EXPECT_EQ(keys, expected);
  EXPECT_TRUE(to_json(r).contains("runtime_ms"));

  const std::string csv = to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "omega,p,p_star,h,q,m,x,v_terminal,success,shortfall");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Output, FormatDoubleRoundTrips) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(5.0), "5");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Binary, ExitCodesAndDeterministicOutput) {
  const auto dir = std::filesystem::temp_directory_path() / "knaphedge_cli_test";
  std::filesystem::create_directories(dir);
  json doc = one_period_doc();
  doc["model"]["binomial"]["N"] = 6;
  std::ofstream(dir / "cfg.json") << doc.dump();
  const std::string cfg = (dir / "cfg.json").string();

  EXPECT_EQ(run_hedge("solve --problem a --mode exact --config " + cfg + " --format csv --out " +
                      (dir / "one.csv").string()),
            0);
  EXPECT_EQ(run_hedge("solve --problem a --mode exact --config " + cfg + " --format csv --out " +
                      (dir / "two.csv").string()),
            0);
  EXPECT_EQ(read_file(dir / "one.csv"), read_file(dir / "two.csv"));

  EXPECT_EQ(run_hedge("solve --problem a --config " + (dir / "missing.json").string()), 2);
  doc["budget"]["v"] = 1e6;
  std::ofstream(dir / "big.json") << doc.dump();
  EXPECT_EQ(run_hedge("solve --problem a --config " + (dir / "big.json").string()), 2);
  EXPECT_EQ(run_hedge("solve --problem z --config " + cfg), 2);
}

}  // namespace
}  // namespace knaphedge::cli
