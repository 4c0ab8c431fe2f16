#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "knaphedge/cli.hpp"

namespace kc = knaphedge::cli;

int main(int argc, char** argv) {
  CLI::App app{"Optimal partial hedging in finite complete markets via knapsack problems"};
  app.require_subcommand(1);

  CLI::App* solve = app.add_subcommand("solve", "Solve a hedging problem described by a config");
  std::string problem;
  std::string config_path;
  std::string mode;
  std::string out_path;
  std::string format = "json";
  bool oracle = false;
  bool levels = false;
  solve->add_option("--problem", problem, "Problem to solve")
      ->required()
      ->check(CLI::IsMember({"a", "a-rand", "b", "c", "d"}));
  solve->add_option("--config", config_path, "JSON config file")->required();
  solve->add_option("--mode", mode, "Search mode for problem a")
      ->check(CLI::IsMember({"exact", "greedy"}));
  solve->add_flag("--oracle", oracle, "Cross-check problem a with brute force (n <= 20)");
  solve->add_flag("--levels", levels, "Group binomial states by up-move count (greedy a)");
  solve->add_option("--out", out_path, "Output file (stdout when omitted)");
  solve->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : static_cast<int>(kc::ExitCode::config);
  }

  try {
    kc::RunConfig config = kc::load_config(config_path);
    config.problem = kc::parse_problem(problem);
    if (!mode.empty()) config.mode = kc::parse_mode(mode);
    config.oracle = config.oracle || oracle;
    config.levels = config.levels || levels;
    if (const char* env = std::getenv("HEDGE_NODE_BUDGET")) {
      try {
        const long long budget = std::stoll(env);
        if (budget <= 0) throw std::invalid_argument("non-positive");
        config.node_budget = static_cast<std::uint64_t>(budget);
      } catch (const std::exception&) {
        throw kc::ConfigError("HEDGE_NODE_BUDGET must be a positive integer");
      }
    }

    const kc::Report report = kc::run(config);
    const kc::Format fmt = format == "csv" ? kc::Format::csv : kc::Format::json;
    if (!out_path.empty()) {
      kc::emit(report, fmt, out_path);
    } else if (fmt == kc::Format::csv) {
      std::cout << kc::to_csv(report);
    } else {
      std::cout << kc::to_json(report).dump(2) << '\n';
    }
    if (config.json_path) kc::emit(report, kc::Format::json, *config.json_path);
    if (config.csv_path) kc::emit(report, kc::Format::csv, *config.csv_path);

    if (!report.optimal) {
      std::cerr << "hedge: node budget exhausted; reporting best solution found\n";
      return static_cast<int>(kc::ExitCode::budget_exhausted);
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "hedge: " << e.what() << '\n';
    return static_cast<int>(kc::exit_code_for(e));
  }
}
