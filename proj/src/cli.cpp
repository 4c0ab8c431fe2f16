#include "knaphedge/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "knaphedge/hedging.hpp"
#include "knaphedge/knapsack.hpp"

namespace knaphedge::cli {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + " is missing '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

std::vector<double> numbers(const json& obj, const std::string& key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_array()) throw ConfigError(where + "." + key + " must be an array of numbers");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) throw ConfigError(where + "." + key + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

bool flag(const json& doc, const std::string& key) {
  if (!doc.contains(key)) return false;
  if (!doc.at(key).is_boolean()) throw ConfigError("'" + key + "' must be a boolean");
  return doc.at(key).get<bool>();
}

market::BinomialParams parse_binomial(const json& obj) {
  require_keys(obj, {"s0", "u", "d", "r", "p", "N", "periods"}, "model.binomial");
  if (obj.contains("N") == obj.contains("periods")) {
    throw ConfigError("model.binomial needs exactly one of 'N' or 'periods'");
  }
  market::BinomialParams params;
  params.s0 = number(obj, "s0", "model.binomial");
  params.up = number(obj, "u", "model.binomial");
  params.down = number(obj, "d", "model.binomial");
  params.rate = obj.contains("r") ? number(obj, "r", "model.binomial") : 0.0;
  params.p_up = number(obj, "p", "model.binomial");
  const json& periods = obj.contains("N") ? obj.at("N") : obj.at("periods");
  if (!periods.is_number_integer()) throw ConfigError("binomial period count must be an integer");
  params.periods = periods.get<int>();
  if (params.periods < 1 || params.periods > kMaxBinomialPeriods) {
    throw ConfigError("binomial period count must lie in [1, " +
                      std::to_string(kMaxBinomialPeriods) + "]");
  }
  return params;
}

TableModel parse_table(const json& obj) {
  require_keys(obj, {"p", "p_star", "prices"}, "model.table");
  if (!obj.contains("p") || !obj.contains("p_star")) {
    throw ConfigError("model.table needs 'p' and 'p_star'");
  }
  TableModel table;
  table.p = numbers(obj, "p", "model.table");
  table.p_star = numbers(obj, "p_star", "model.table");
  if (obj.contains("prices")) table.prices = numbers(obj, "prices", "model.table");
  if (table.p.empty()) throw ConfigError("model.table must list at least one state");
  return table;
}

struct Market {
  std::optional<market::ScenarioTree> tree;
  market::MeasurePair measures;
  market::Claim claim;
};

Market build_market(const RunConfig& config) {
  if (const auto* params = std::get_if<market::BinomialParams>(&config.model)) {
    market::ScenarioTree tree = market::build_binomial(*params);
    market::MeasurePair measures = market::risk_neutral_measure(tree);
    if (config.claim.type) {
      const double discount = std::pow(1.0 + params->rate, -params->periods);
      market::Claim claim = market::vanilla_claim(tree, *config.claim.type, config.claim.strike,
                                                  discount);
      return Market{std::move(tree), std::move(measures), std::move(claim)};
    }
    if (config.claim.payoff.size() != tree.num_states()) {
      throw ConfigError("claim.payoff must list one value per terminal state (" +
                        std::to_string(tree.num_states()) + ")");
    }
    return Market{std::move(tree), std::move(measures), market::Claim(config.claim.payoff)};
  }
  const auto& table = std::get<TableModel>(config.model);
  market::MeasurePair measures(table.p, table.p_star);
  if (config.claim.type) {
    if (table.prices.size() != table.p.size()) {
      throw ConfigError("call/put claims on a table model need one price per state");
    }
    std::vector<double> h;
    for (double x : table.prices) {
      h.push_back(*config.claim.type == market::OptionType::call
                      ? std::max(x - config.claim.strike, 0.0)
                      : std::max(config.claim.strike - x, 0.0));
    }
    return Market{std::nullopt, std::move(measures), market::Claim(std::move(h))};
  }
  if (config.claim.payoff.size() != table.p.size()) {
    throw ConfigError("claim.payoff must list one value per state");
  }
  return Market{std::nullopt, std::move(measures), market::Claim(config.claim.payoff)};
}

void write_optional(nlohmann::ordered_json& obj, const char* key, const std::optional<double>& v) {
  obj[key] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

Problem parse_problem(const std::string& name) {
  if (name == "a") return Problem::a;
  if (name == "a-rand") return Problem::a_randomized;
  if (name == "b") return Problem::b;
  if (name == "c") return Problem::c;
  if (name == "d") return Problem::d;
  throw ConfigError("unknown problem '" + name + "' (expected a, a-rand, b, c or d)");
}

Mode parse_mode(const std::string& name) {
  if (name == "exact") return Mode::exact;
  if (name == "greedy") return Mode::greedy;
  throw ConfigError("unknown mode '" + name + "' (expected exact or greedy)");
}

std::string to_string(Problem problem) {
  switch (problem) {
    case Problem::a: return "a";
    case Problem::a_randomized: return "a-rand";
    case Problem::b: return "b";
    case Problem::c: return "c";
    case Problem::d: return "d";
  }
  return "unknown";
}

RunConfig parse_config(const json& doc) {
  require_keys(doc,
               {"model", "claim", "budget", "problem", "mode", "oracle", "levels", "output",
                "node_budget"},
               "config");
  if (!doc.contains("model") || !doc.contains("claim") || !doc.contains("budget")) {
    throw ConfigError("config needs 'model', 'claim' and 'budget'");
  }
  RunConfig config;

  const json& model = doc.at("model");
  require_keys(model, {"binomial", "table"}, "model");
  if (model.contains("binomial") == model.contains("table")) {
    throw ConfigError("model needs exactly one of 'binomial' or 'table'");
  }
  if (model.contains("binomial")) {
    config.model = parse_binomial(model.at("binomial"));
  } else {
    config.model = parse_table(model.at("table"));
  }

  const json& claim = doc.at("claim");
  require_keys(claim, {"type", "strike", "payoff"}, "claim");
  if (claim.contains("type") == claim.contains("payoff")) {
    throw ConfigError("claim needs exactly one of 'type' (call/put) or 'payoff'");
  }
  if (claim.contains("type")) {
    const json& type = claim.at("type");
    if (type == "call") {
      config.claim.type = market::OptionType::call;
    } else if (type == "put") {
      config.claim.type = market::OptionType::put;
    } else {
      throw ConfigError("claim.type must be 'call' or 'put'");
    }
    config.claim.strike = number(claim, "strike", "claim");
  } else {
    config.claim.payoff = numbers(claim, "payoff", "claim");
  }

  const json& budget = doc.at("budget");
  require_keys(budget, {"v", "alpha"}, "budget");
  if (budget.contains("v") == budget.contains("alpha")) {
    throw ConfigError("budget needs exactly one of 'v' or 'alpha'");
  }
  if (budget.contains("v")) {
    config.budget.value = number(budget, "v", "budget");
    if (*config.budget.value < 0.0) throw ConfigError("budget.v must be non-negative");
  } else {
    config.budget.fraction = number(budget, "alpha", "budget");
    if (*config.budget.fraction < 0.0 || !(*config.budget.fraction < 1.0)) {
      throw ConfigError("budget.alpha must satisfy 0 <= alpha < 1");
    }
  }

  if (doc.contains("problem")) {
    if (!doc.at("problem").is_string()) throw ConfigError("'problem' must be a string");
    config.problem = parse_problem(doc.at("problem").get<std::string>());
  }
  if (doc.contains("mode")) {
    if (!doc.at("mode").is_string()) throw ConfigError("'mode' must be a string");
    config.mode = parse_mode(doc.at("mode").get<std::string>());
  }
  config.oracle = flag(doc, "oracle");
  config.levels = flag(doc, "levels");
  if (doc.contains("output")) {
    const json& out = doc.at("output");
    require_keys(out, {"json", "csv"}, "output");
    if (out.contains("json")) config.json_path = out.at("json").get<std::string>();
    if (out.contains("csv")) config.csv_path = out.at("csv").get<std::string>();
  }
  if (doc.contains("node_budget")) {
    const json& nb = doc.at("node_budget");
    if (!nb.is_number_unsigned() || nb.get<std::uint64_t>() == 0) {
      throw ConfigError("'node_budget' must be a positive integer");
    }
    config.node_budget = nb.get<std::uint64_t>();
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(doc);
}

Report run(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const Market mkt = build_market(config);
  const market::ScenarioTree* tree = mkt.tree ? &*mkt.tree : nullptr;
  const double price = market::price(mkt.claim, mkt.measures);
  const hedging::HedgeBudget budget =
      config.budget.value ? hedging::HedgeBudget::from_value(*config.budget.value, price)
                          : hedging::HedgeBudget::from_fraction(*config.budget.fraction, price);

  if (config.levels &&
      (config.problem != Problem::a || config.mode != Mode::greedy || tree == nullptr)) {
    throw ConfigError("level grouping needs a binomial model with problem a in greedy mode");
  }

  hedging::HedgeSolution sol;
  switch (config.problem) {
    case Problem::a:
      if (config.levels) {
        const auto periods = std::get<market::BinomialParams>(config.model).periods;
        const auto ups = market::binomial_up_moves(periods);
        const std::vector<std::int64_t> keys(ups.begin(), ups.end());
        sol = hedging::solve_problem_a_grouped(mkt.claim, mkt.measures, tree, budget, keys);
      } else {
        sol = hedging::solve_problem_a(
            mkt.claim, mkt.measures, tree, budget,
            config.mode == Mode::exact ? hedging::SearchMode::exact : hedging::SearchMode::greedy,
            knapsack::SolverOptions{config.node_budget});
      }
      break;
    case Problem::a_randomized:
      sol = hedging::solve_problem_a_randomized(mkt.claim, mkt.measures, tree, budget);
      break;
    case Problem::b:
      sol = hedging::solve_problem_b(mkt.claim, mkt.measures, tree, budget.v);
      break;
    case Problem::c:
      sol = hedging::solve_problem_c(mkt.claim, mkt.measures, tree, budget);
      break;
    case Problem::d:
      sol = hedging::solve_problem_d(mkt.claim, mkt.measures, tree, budget);
      break;
  }

  Report report;
  report.problem = to_string(config.problem);
  if (config.problem == Problem::a) {
    report.mode = config.mode == Mode::exact ? "exact" : "greedy";
  }
  report.price = price;
  report.budget = budget.v;
  report.alpha = budget.alpha;
  report.objective = sol.objective;
  report.bound_greedy = sol.bounds.greedy;
  report.bound_exact = sol.bounds.exact;
  report.bound_dantzig = sol.bounds.dantzig;
  report.error_bound = sol.bounds.error_bound;
  report.initial_cost = sol.initial_cost;
  report.success_probability = sol.success_probability;
  report.expected_shortfall = sol.expected_shortfall;
  if (sol.critical_state) report.critical_state = *sol.critical_state + 1;
  if (sol.sacrificed_state) report.sacrificed_state = *sol.sacrificed_state + 1;
  report.sacrificed_value = sol.sacrificed_value;
  report.optimal = sol.optimal;
  report.replication_available = sol.replication.has_value();
  report.levels_used = config.levels;

  if (config.oracle && config.problem == Problem::a && mkt.claim.size() <= kOracleLimit) {
    const auto inst = hedging::reduce_problem_a(mkt.claim, mkt.measures, budget);
    report.oracle_z = knapsack::brute_force_01(inst).objective;
  }

  const hedging::QWeights weights = hedging::q_weights(mkt.claim, mkt.measures);
  const auto& terminal = sol.terminal_values();
  for (std::size_t i = 0; i < mkt.claim.size(); ++i) {
    StateRow row;
    row.omega = i + 1;
    row.p = mkt.measures.p()[i];
    row.p_star = mkt.measures.p_star()[i];
    row.h = mkt.claim[i];
    row.q = weights.q[i];
    row.m = weights.m[i];
    row.x = sol.decision[i];
    row.v_terminal = terminal[i];
    row.success = market::hedge_succeeds(terminal[i], row.h);
    row.shortfall = row.p * std::max(row.h - terminal[i], 0.0);
    report.states.push_back(row);
  }
  report.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

nlohmann::ordered_json to_json(const Report& report, bool include_runtime) {
  nlohmann::ordered_json doc;
  doc["problem"] = report.problem;
  doc["mode"] = report.mode ? nlohmann::ordered_json(*report.mode) : nlohmann::ordered_json(nullptr);
  doc["price"] = report.price;
  doc["budget"] = report.budget;
  doc["alpha"] = report.alpha;
  doc["objective"] = report.objective;
  nlohmann::ordered_json bounds = nlohmann::ordered_json::object();
  write_optional(bounds, "greedy", report.bound_greedy);
  write_optional(bounds, "exact", report.bound_exact);
  write_optional(bounds, "dantzig", report.bound_dantzig);
  write_optional(bounds, "error_bound", report.error_bound);
  doc["bounds"] = bounds;
  doc["initial_cost"] = report.initial_cost;
  doc["success_probability"] = report.success_probability;
  doc["expected_shortfall"] = report.expected_shortfall;
  doc["critical_state"] = report.critical_state ? nlohmann::ordered_json(*report.critical_state)
                                                : nlohmann::ordered_json(nullptr);
  doc["sacrificed_state"] = report.sacrificed_state
                                ? nlohmann::ordered_json(*report.sacrificed_state)
                                : nlohmann::ordered_json(nullptr);
  write_optional(doc, "sacrificed_value", report.sacrificed_value);
  if (report.oracle_z) doc["oracle_z"] = *report.oracle_z;
  doc["optimal"] = report.optimal;
  doc["replication_available"] = report.replication_available;
  doc["levels_used"] = report.levels_used;
  nlohmann::ordered_json states = nlohmann::ordered_json::array();
  for (const StateRow& row : report.states) {
    nlohmann::ordered_json s;
    s["omega"] = row.omega;
    s["p"] = row.p;
    s["p_star"] = row.p_star;
    s["h"] = row.h;
    s["q"] = row.q;
    s["m"] = row.m;
    s["x"] = row.x;
    s["v_terminal"] = row.v_terminal;
    s["success"] = row.success;
    s["shortfall"] = row.shortfall;
    states.push_back(std::move(s));
  }
  doc["states"] = std::move(states);
  if (include_runtime) doc["runtime_ms"] = report.runtime_ms;
  return doc;
}

std::string to_csv(const Report& report) {
  std::ostringstream out;
  out << "omega,p,p_star,h,q,m,x,v_terminal,success,shortfall\n";
  for (const StateRow& row : report.states) {
    out << row.omega << ',' << format_double(row.p) << ',' << format_double(row.p_star) << ','
        << format_double(row.h) << ',' << format_double(row.q) << ',' << format_double(row.m)
        << ',' << format_double(row.x) << ',' << format_double(row.v_terminal) << ','
        << (row.success ? 1 : 0) << ',' << format_double(row.shortfall) << '\n';
  }
  return out.str();
}

void emit(const Report& report, Format format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file '" + path + "'");
  if (format == Format::json) {
    out << to_json(report).dump(2) << '\n';
  } else {
    out << to_csv(report);
  }
  if (!out) throw Error("failed writing output file '" + path + "'");
}

ExitCode exit_code_for(const std::exception& error) {
  if (dynamic_cast<const ModelError*>(&error) != nullptr) return ExitCode::model;
  if (dynamic_cast<const DegenerateClaimError*>(&error) != nullptr) {
    return ExitCode::degenerate_claim;
  }
  if (dynamic_cast<const InvalidInput*>(&error) != nullptr) return ExitCode::config;
  return ExitCode::io;
}

}  // namespace knaphedge::cli
