#include "knaphedge/hedging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "knaphedge/errors.hpp"

namespace knaphedge::hedging {

namespace {

using knapsack::KnapsackInstance;
using knapsack::KnapsackSolution;
using knapsack::Variant;

constexpr double kInfinity = std::numeric_limits<double>::infinity();

void check_dimensions(const Claim& claim, const MeasurePair& measures, const ScenarioTree* tree) {
  if (claim.size() != measures.size()) {
    throw InvalidInput("claim and measures have different numbers of states");
  }
  if (tree != nullptr && tree->num_states() != claim.size()) {
    throw InvalidInput("claim and scenario tree have different numbers of states");
  }
}

double perfect_price(const Claim& claim, const MeasurePair& measures) {
  const double price = market::price(claim, measures);
  if (!(price > 0.0)) {
    throw DegenerateClaimError("claim has zero perfect-hedge price; nothing to hedge");
  }
  return price;
}

// alpha recomputed from v against the claim actually being hedged.
double checked_alpha(const HedgeBudget& budget, double price) {
  return HedgeBudget::from_value(budget.v, price).alpha;
}

std::vector<double> times(const Claim& claim, const std::vector<double>& x) {
  std::vector<double> out(claim.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = claim[i] * x[i];
  return out;
}

// Replicates the modified claim (if a tree is present) and fills the metrics.
void finish(HedgeSolution& sol, const Claim& claim, const MeasurePair& measures,
            const ScenarioTree* tree) {
  if (tree != nullptr) {
    sol.replication = market::replicate(sol.modified_claim, *tree, measures);
    sol.initial_cost = sol.replication->value.initial();
  } else {
    sol.initial_cost = market::expectation(sol.modified_claim, measures.p_star());
  }
  const auto& terminal = sol.terminal_values();
  sol.success_probability = market::success_probability(terminal, claim, measures);
  sol.expected_shortfall = market::expected_shortfall(terminal, claim, measures);
}

// Quasi-replicating claim: H everywhere except `state`, which absorbs the
// difference between v and the price of the rest.
std::pair<std::vector<double>, double> quasi_replicating_claim(const Claim& claim,
                                                              const MeasurePair& measures,
                                                              std::size_t state, double v) {
  double rest = 0.0;
  for (std::size_t i = 0; i < claim.size(); ++i) {
    if (i != state) rest += measures.p_star()[i] * claim[i];
  }
  const double value = (v - rest) / measures.p_star()[state];
  std::vector<double> modified = claim.payoffs();
  modified[state] = value;
  return {std::move(modified), value};
}

}  // namespace

std::string_view to_string(ProblemTag tag) {
  switch (tag) {
    case ProblemTag::a_exact: return "a-exact";
    case ProblemTag::a_greedy: return "a-greedy";
    case ProblemTag::a_randomized: return "a-rand";
    case ProblemTag::b: return "b";
    case ProblemTag::c: return "c";
    case ProblemTag::d: return "d";
  }
  return "unknown";
}

HedgeBudget HedgeBudget::from_value(double v, double perfect_price) {
  if (!(perfect_price > 0.0)) {
    throw DegenerateClaimError("claim has zero perfect-hedge price; nothing to hedge");
  }
  if (!std::isfinite(v) || v < 0.0) throw InvalidInput("budget must be a non-negative number");
  // A budget within rounding of the price is a perfect hedge.
  if (!(v < perfect_price - market::value_tolerance(perfect_price))) {
    throw InvalidInput("budget must be strictly below the perfect-hedge price (v < E*(H) = " +
                       std::to_string(perfect_price) + ")");
  }
  return HedgeBudget{v, v / perfect_price};
}

HedgeBudget HedgeBudget::from_fraction(double alpha, double perfect_price) {
  if (!std::isfinite(alpha) || alpha < 0.0 || !(alpha < 1.0)) {
    throw InvalidInput("budget fraction must satisfy 0 <= alpha < 1");
  }
  return from_value(alpha * perfect_price, perfect_price);
}

const std::vector<double>& HedgeSolution::terminal_values() const {
  return replication ? replication->value.terminal_values : modified_claim;
}

QWeights q_weights(const Claim& claim, const MeasurePair& measures) {
  check_dimensions(claim, measures, nullptr);
  const double price = perfect_price(claim, measures);
  const double mean = market::expectation(claim.payoffs(), measures.p());
  QWeights w;
  w.q.resize(claim.size());
  w.m.resize(claim.size());
  for (std::size_t i = 0; i < claim.size(); ++i) {
    w.q[i] = measures.p_star()[i] * claim[i] / price;
    w.m[i] = measures.p()[i] * claim[i] / mean;
  }
  return w;
}

KnapsackInstance reduce_problem_a(const Claim& claim, const MeasurePair& measures,
                                  const HedgeBudget& budget) {
  const double alpha = checked_alpha(budget, perfect_price(claim, measures));
  KnapsackInstance inst;
  inst.gains = measures.p();
  inst.weights = q_weights(claim, measures).q;
  inst.capacity = alpha;
  inst.variant = Variant::binary;
  return inst;
}

HedgeSolution solve_problem_a(const Claim& claim, const MeasurePair& measures,
                              const ScenarioTree* tree, const HedgeBudget& budget, SearchMode mode,
                              const knapsack::SolverOptions& options) {
  check_dimensions(claim, measures, tree);
  const KnapsackInstance inst = reduce_problem_a(claim, measures, budget);
  const KnapsackSolution greedy = knapsack::solve_greedy(inst);

  HedgeSolution sol;
  sol.budget = budget.v;
  sol.bounds.greedy = greedy.objective;
  sol.bounds.dantzig = greedy.dantzig_bound;
  sol.bounds.error_bound = greedy.error_bound;
  sol.critical_state = greedy.critical;
  if (mode == SearchMode::greedy) {
    sol.problem = ProblemTag::a_greedy;
    sol.decision = greedy.x;
    sol.objective = greedy.objective;
  } else {
    const KnapsackSolution exact = knapsack::solve_exact_01(inst, options);
    sol.problem = ProblemTag::a_exact;
    sol.decision = exact.x;
    sol.objective = exact.objective;
    sol.bounds.exact = exact.objective;
    sol.optimal = exact.optimal;
  }
  sol.modified_claim = times(claim, sol.decision);
  finish(sol, claim, measures, tree);
  return sol;
}

HedgeSolution solve_problem_a_randomized(const Claim& claim, const MeasurePair& measures,
                                         const ScenarioTree* tree, const HedgeBudget& budget) {
  check_dimensions(claim, measures, tree);
  KnapsackInstance inst = reduce_problem_a(claim, measures, budget);
  inst.variant = Variant::continuous;
  const KnapsackSolution relaxed = knapsack::solve_continuous(inst);

  HedgeSolution sol;
  sol.problem = ProblemTag::a_randomized;
  sol.budget = budget.v;
  sol.decision = relaxed.x;
  sol.objective = relaxed.objective;
  sol.bounds.dantzig = relaxed.objective;
  sol.bounds.error_bound = relaxed.error_bound;
  sol.critical_state = relaxed.critical;
  sol.modified_claim = times(claim, sol.decision);
  finish(sol, claim, measures, tree);
  return sol;
}

NeymanPearsonTest neyman_pearson_test(const Claim& claim, const MeasurePair& measures,
                                      const HedgeBudget& budget) {
  check_dimensions(claim, measures, nullptr);
  const double price = perfect_price(claim, measures);
  const double alpha = checked_alpha(budget, price);
  const auto q = q_weights(claim, measures).q;
  const std::size_t n = claim.size();

  NeymanPearsonTest test;
  test.density.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    test.density[i] = q[i] == 0.0 ? kInfinity : measures.p()[i] / q[i];
  }

  // Q-mass of each finite density level, highest level first.
  std::map<double, double, std::greater<>> mass;
  for (std::size_t i = 0; i < n; ++i) {
    if (q[i] > 0.0) mass[test.density[i]] += q[i];
  }
  const double limit = alpha + knapsack::capacity_tolerance(alpha);
  double above = 0.0;  // Q(dP/dQ > level); +inf states carry no Q-mass
  for (const auto& [level, level_mass] : mass) {
    if (above + level_mass > limit) {
      test.c_star = level / price;
      test.gamma = std::clamp((alpha - above) / level_mass, 0.0, 1.0);
      test.psi.assign(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (test.density[i] > level) {
          test.psi[i] = 1.0;
        } else if (test.density[i] == level) {
          test.psi[i] = test.gamma;
          test.level.push_back(i);
        }
      }
      return test;
    }
    above += level_mass;
  }
  throw InvalidInput("budget fraction is not below 1 within tolerance; no critical level");
}

HedgeSolution solve_problem_b(const Claim& claim, const MeasurePair& measures,
                              const ScenarioTree* tree, double v0) {
  check_dimensions(claim, measures, tree);
  const double price = perfect_price(claim, measures);
  if (!std::isfinite(v0) || !(v0 < price - market::value_tolerance(price))) {
    throw InvalidInput("budget must be strictly below the perfect-hedge price (v0 < E*(H))");
  }
  const auto& p = measures.p();
  const auto sacrificed =
      static_cast<std::size_t>(std::min_element(p.begin(), p.end()) - p.begin());

  HedgeSolution sol;
  sol.problem = ProblemTag::b;
  sol.budget = v0;
  auto [modified, lambda] = quasi_replicating_claim(claim, measures, sacrificed, v0);
  sol.modified_claim = std::move(modified);
  sol.decision = sol.modified_claim;
  sol.sacrificed_state = sacrificed;
  sol.sacrificed_value = lambda;
  finish(sol, claim, measures, tree);
  sol.objective = sol.success_probability;
  return sol;
}

KnapsackInstance reduce_problem_c(const Claim& claim, const MeasurePair& measures,
                                  const HedgeBudget& budget) {
  const double alpha = checked_alpha(budget, perfect_price(claim, measures));
  const QWeights w = q_weights(claim, measures);
  KnapsackInstance inst;
  inst.gains = w.m;
  inst.weights = w.q;
  inst.capacity = alpha;
  inst.variant = Variant::continuous;
  return inst;
}

HedgeSolution solve_problem_c(const Claim& claim, const MeasurePair& measures,
                              const ScenarioTree* tree, const HedgeBudget& budget) {
  check_dimensions(claim, measures, tree);
  const KnapsackSolution relaxed = knapsack::solve_continuous(reduce_problem_c(claim, measures, budget));

  HedgeSolution sol;
  sol.problem = ProblemTag::c;
  sol.budget = budget.v;
  sol.decision = relaxed.x;
  sol.critical_state = relaxed.critical;
  sol.modified_claim = times(claim, sol.decision);
  finish(sol, claim, measures, tree);
  sol.objective = sol.expected_shortfall;
  return sol;
}

KnapsackInstance reduce_problem_d(const Claim& claim, const MeasurePair& measures,
                                  const HedgeBudget& budget) {
  const double price = perfect_price(claim, measures);
  HedgeBudget::from_value(budget.v, price);
  KnapsackInstance inst;
  inst.gains = measures.p();
  inst.weights = measures.p_star();
  inst.capacity = budget.v;
  inst.upper_bounds = claim.payoffs();
  inst.variant = Variant::variable_bound;
  return inst;
}

HedgeSolution solve_problem_d(const Claim& claim, const MeasurePair& measures,
                              const ScenarioTree* tree, const HedgeBudget& budget) {
  check_dimensions(claim, measures, tree);
  const KnapsackSolution solution =
      knapsack::solve_variable_bound(reduce_problem_d(claim, measures, budget));

  HedgeSolution sol;
  sol.problem = ProblemTag::d;
  sol.budget = budget.v;
  sol.sacrificed_state = solution.critical;
  sol.modified_claim = solution.x;
  sol.decision = solution.x;
  sol.sacrificed_value = solution.x[*solution.critical];
  finish(sol, claim, measures, tree);
  sol.objective = sol.expected_shortfall;
  return sol;
}

GroupedInstance group_levels(const KnapsackInstance& instance,
                             std::span<const std::int64_t> level_key) {
  instance.validate();
  if (level_key.size() != instance.size()) throw InvalidInput("one level key per item required");
  GroupedInstance out;
  std::map<std::int64_t, std::size_t> slot;
  for (std::size_t i : knapsack::order_by_ratio(instance)) {
    auto [it, inserted] = slot.try_emplace(level_key[i], out.keys.size());
    if (inserted) {
      out.keys.push_back(level_key[i]);
      out.members.emplace_back();
    }
    out.members[it->second].push_back(i);
  }
  out.grouped.variant = instance.variant;
  out.grouped.capacity = instance.capacity;
  for (const auto& members : out.members) {
    double g = 0.0;
    double w = 0.0;
    for (std::size_t i : members) {
      g += instance.gains[i];
      w += instance.weights[i];
    }
    out.grouped.gains.push_back(g);
    out.grouped.weights.push_back(w);
  }
  return out;
}

KnapsackSolution solve_greedy_grouped(const KnapsackInstance& instance,
                                      const GroupedInstance& levels) {
  instance.validate();
  const double total = std::accumulate(instance.weights.begin(), instance.weights.end(), 0.0);
  if (!(instance.capacity < total)) {
    throw InvalidInput("capacity must be strictly below the total weight");
  }
  const double limit = instance.capacity + knapsack::capacity_tolerance(instance.capacity);
  KnapsackSolution out;
  out.x.assign(instance.size(), 0.0);
  double filled = 0.0;
  for (std::size_t k : knapsack::order_by_ratio(levels.grouped)) {
    const auto& members = levels.members[k];
    if (filled + levels.grouped.weights[k] <= limit) {
      for (std::size_t i : members) {
        if (instance.gains[i] != 0.0 || instance.weights[i] != 0.0) out.x[i] = 1.0;
      }
      filled += levels.grouped.weights[k];
      continue;
    }
    // Critical level: take members one by one while they fit.
    for (std::size_t i : members) {
      if (instance.gains[i] == 0.0 && instance.weights[i] == 0.0) continue;
      if (filled + instance.weights[i] > limit) {
        out.critical = i;
        out.error_bound = instance.gains[i];
        std::vector<double> relaxed = out.x;
        relaxed[i] = std::clamp((instance.capacity - filled) / instance.weights[i], 0.0, 1.0);
        out.dantzig_bound = knapsack::objective(instance, relaxed);
        out.objective = knapsack::objective(instance, out.x);
        return out;
      }
      out.x[i] = 1.0;
      filled += instance.weights[i];
    }
  }
  throw InvalidInput("capacity covers every level within tolerance; no critical item exists");
}

HedgeSolution solve_problem_a_grouped(const Claim& claim, const MeasurePair& measures,
                                      const ScenarioTree* tree, const HedgeBudget& budget,
                                      std::span<const std::int64_t> level_key) {
  check_dimensions(claim, measures, tree);
  const KnapsackInstance inst = reduce_problem_a(claim, measures, budget);
  const KnapsackSolution greedy = solve_greedy_grouped(inst, group_levels(inst, level_key));

  HedgeSolution sol;
  sol.problem = ProblemTag::a_greedy;
  sol.budget = budget.v;
  sol.decision = greedy.x;
  sol.objective = greedy.objective;
  sol.bounds.greedy = greedy.objective;
  sol.bounds.dantzig = greedy.dantzig_bound;
  sol.bounds.error_bound = greedy.error_bound;
  sol.critical_state = greedy.critical;
  sol.modified_claim = times(claim, sol.decision);
  finish(sol, claim, measures, tree);
  return sol;
}

LevelGreedyResult solve_greedy_levels(std::span<const LevelClass> levels, double capacity) {
  KnapsackInstance summary;
  summary.capacity = capacity;
  double total = 0.0;
  for (const auto& level : levels) {
    if (!(level.count >= 0.0) || !(level.unit_gain >= 0.0) || !(level.unit_weight >= 0.0)) {
      throw InvalidInput("level classes need non-negative count, gain and weight");
    }
    summary.gains.push_back(level.unit_gain);
    summary.weights.push_back(level.unit_weight);
    total += level.count * level.unit_weight;
  }
  if (!(capacity < total)) throw InvalidInput("capacity must be strictly below the total weight");

  const double limit = capacity + knapsack::capacity_tolerance(capacity);
  LevelGreedyResult out;
  out.taken.assign(levels.size(), 0.0);
  double filled = 0.0;
  for (std::size_t k : knapsack::order_by_ratio(summary)) {
    const LevelClass& level = levels[k];
    const double weight = level.count * level.unit_weight;
    if (filled + weight <= limit) {
      out.taken[k] = level.count;
      filled += weight;
      out.objective += level.count * level.unit_gain;
      continue;
    }
    const double affordable = std::floor((limit - filled) / level.unit_weight);
    out.taken[k] = std::clamp(affordable, 0.0, level.count - 1.0);
    filled += out.taken[k] * level.unit_weight;
    out.objective += out.taken[k] * level.unit_gain;
    out.critical_level = k;
    out.error_bound = level.unit_gain;
    const double fraction = std::clamp((capacity - filled) / level.unit_weight, 0.0, 1.0);
    out.dantzig_bound = out.objective + fraction * level.unit_gain;
    return out;
  }
  throw InvalidInput("capacity covers every level within tolerance; no critical item exists");
}

BinomialLevels binomial_problem_a_levels(const market::BinomialParams& params,
                                         market::OptionType type, double strike) {
  const double growth = 1.0 + params.rate;
  if (params.periods < 1) throw InvalidInput("binomial model needs at least one period");
  if (!(params.p_up > 0.0 && params.p_up < 1.0)) {
    throw InvalidInput("up-move probability must lie in (0, 1)");
  }
  if (!(params.down > 0.0 && params.down < growth && growth < params.up)) {
    throw ArbitrageError("binomial factors admit arbitrage: need 0 < d < 1 + r < u");
  }
  const int n = params.periods;
  const double q = market::binomial_risk_neutral_up(params);
  const double discount = std::pow(growth, -n);

  BinomialLevels out;
  std::vector<double> payoff(static_cast<std::size_t>(n) + 1);
  std::vector<double> risk_neutral(payoff.size());
  double count = 1.0;
  for (int k = 0; k <= n; ++k) {
    if (k > 0) count = count * static_cast<double>(n - k + 1) / static_cast<double>(k);
    const double x = params.s0 * std::pow(params.up, k) * std::pow(params.down, n - k) * discount;
    const double kd = strike * discount;
    const auto slot = static_cast<std::size_t>(k);
    payoff[slot] = type == market::OptionType::call ? std::max(x - kd, 0.0) : std::max(kd - x, 0.0);
    risk_neutral[slot] = std::pow(q, k) * std::pow(1.0 - q, n - k);
    out.classes.push_back(LevelClass{k, count, std::pow(params.p_up, k) *
                                                   std::pow(1.0 - params.p_up, n - k),
                                     0.0});
    out.perfect_price += count * risk_neutral[slot] * payoff[slot];
  }
  if (!(out.perfect_price > 0.0)) {
    throw DegenerateClaimError("claim has zero perfect-hedge price; nothing to hedge");
  }
  for (std::size_t k = 0; k < out.classes.size(); ++k) {
    out.classes[k].unit_weight = risk_neutral[k] * payoff[k] / out.perfect_price;
  }
  return out;
}

}  // namespace knaphedge::hedging
