#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "knaphedge/errors.hpp"
#include "knaphedge/market.hpp"

namespace knaphedge::cli {

class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

enum class ExitCode : int {
  ok = 0,
  io = 1,
  config = 2,
  model = 3,
  degenerate_claim = 4,
  budget_exhausted = 5,
};

// Terminal states given directly; no price process, so no strategy.
struct TableModel {
  std::vector<double> p;
  std::vector<double> p_star;
  std::vector<double> prices;  // optional discounted underlying per state
};

struct ClaimSpec {
  std::optional<market::OptionType> type;
  double strike = 0.0;
  std::vector<double> payoff;
};

struct BudgetSpec {
  std::optional<double> value;
  std::optional<double> fraction;
};

enum class Problem { a, a_randomized, b, c, d };
enum class Mode { exact, greedy };
enum class Format { json, csv };

struct RunConfig {
  std::variant<market::BinomialParams, TableModel> model;
  ClaimSpec claim;
  BudgetSpec budget;
  Problem problem = Problem::a;
  Mode mode = Mode::greedy;
  bool oracle = false;
  bool levels = false;
  std::optional<std::string> json_path;
  std::optional<std::string> csv_path;
  std::uint64_t node_budget = 10'000'000;
};

inline constexpr int kMaxBinomialPeriods = 20;
inline constexpr std::size_t kOracleLimit = 20;

// Parses a config document; `problem`, `mode`, `oracle`, `levels` and
// `output` are optional so the command line can supply them.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

Problem parse_problem(const std::string& name);
Mode parse_mode(const std::string& name);
std::string to_string(Problem problem);

struct StateRow {
  std::size_t omega = 0;  // 1-based
  double p = 0.0;
  double p_star = 0.0;
  double h = 0.0;
  double q = 0.0;
  double m = 0.0;
  double x = 0.0;
  double v_terminal = 0.0;
  bool success = false;
  double shortfall = 0.0;  // p * (h - V_T)^+
};

struct Report {
  std::string problem;
  std::optional<std::string> mode;
  double price = 0.0;
  double budget = 0.0;
  double alpha = 0.0;
  double objective = 0.0;
  std::optional<double> bound_greedy;
  std::optional<double> bound_exact;
  std::optional<double> bound_dantzig;
  std::optional<double> error_bound;
  double initial_cost = 0.0;
  double success_probability = 0.0;
  double expected_shortfall = 0.0;
  std::optional<std::size_t> critical_state;    // 1-based
  std::optional<std::size_t> sacrificed_state;  // 1-based
  std::optional<double> sacrificed_value;
  std::optional<double> oracle_z;
  bool optimal = true;
  bool replication_available = false;
  bool levels_used = false;
  std::vector<StateRow> states;
  double runtime_ms = 0.0;
};

Report run(const RunConfig& config);

nlohmann::ordered_json to_json(const Report& report, bool include_runtime = true);
std::string to_csv(const Report& report);
// Writes the report in `format` to `path`.
void emit(const Report& report, Format format, const std::string& path);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

ExitCode exit_code_for(const std::exception& error);

}  // namespace knaphedge::cli
