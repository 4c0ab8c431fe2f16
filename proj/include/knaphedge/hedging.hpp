#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "knaphedge/knapsack.hpp"
#include "knaphedge/market.hpp"

namespace knaphedge::hedging {

using market::Claim;
using market::MeasurePair;
using market::ScenarioTree;

enum class ProblemTag { a_exact, a_greedy, a_randomized, b, c, d };

std::string_view to_string(ProblemTag tag);

// Initial-capital cap v together with alpha = v / E*(H).
struct HedgeBudget {
  double v = 0.0;
  double alpha = 0.0;

  // Requires 0 <= v < perfect_price, with v counted as equal to the price
  // when within value_tolerance of it.
  static HedgeBudget from_value(double v, double perfect_price);
  // Requires 0 <= alpha < 1.
  static HedgeBudget from_fraction(double alpha, double perfect_price);
};

// q_i = p*_i h_i / E*(H); m_i = p_i h_i / E(H).
struct QWeights {
  std::vector<double> q;
  std::vector<double> m;
};

QWeights q_weights(const Claim& claim, const MeasurePair& measures);

struct Bounds {
  std::optional<double> greedy;
  std::optional<double> exact;
  std::optional<double> dantzig;
  std::optional<double> error_bound;
};

struct HedgeSolution {
  ProblemTag problem = ProblemTag::a_greedy;
  // Claim actually replicated: H^A, H*, H^B, H^C or H^D.
  std::vector<double> modified_claim;
  // Knapsack decision per state (indicator, randomized test, or x^D).
  std::vector<double> decision;
  // Absent when no scenario tree was supplied.
  std::optional<market::Replication> replication;
  double budget = 0.0;
  double initial_cost = 0.0;
  double success_probability = 0.0;
  double expected_shortfall = 0.0;
  // z^G, z^A, z*, success probability (B) or expected shortfall (C, D).
  double objective = 0.0;
  Bounds bounds;
  std::optional<std::size_t> critical_state;
  std::optional<std::size_t> sacrificed_state;
  // lambda for B, phi for D.
  std::optional<double> sacrificed_value;
  bool optimal = true;

  // V_T when replicated, otherwise the modified claim itself.
  const std::vector<double>& terminal_values() const;
};

enum class SearchMode { exact, greedy };

// Problem A as a 0-1 knapsack: gains p, weights q, capacity alpha.
knapsack::KnapsackInstance reduce_problem_a(const Claim& claim, const MeasurePair& measures,
                                            const HedgeBudget& budget);

// `tree` may be null, in which case no strategy is reconstructed.
HedgeSolution solve_problem_a(const Claim& claim, const MeasurePair& measures,
                              const ScenarioTree* tree, const HedgeBudget& budget, SearchMode mode,
                              const knapsack::SolverOptions& options = {});

HedgeSolution solve_problem_a_randomized(const Claim& claim, const MeasurePair& measures,
                                         const ScenarioTree* tree, const HedgeBudget& budget);

struct NeymanPearsonTest {
  double c_star = 0.0;
  double gamma = 0.0;
  std::vector<double> psi;
  // States on the critical level {dP/dQ = c* E*(H)}.
  std::vector<std::size_t> level;
  // dP/dQ per state, +inf where q_i = 0.
  std::vector<double> density;
};

NeymanPearsonTest neyman_pearson_test(const Claim& claim, const MeasurePair& measures,
                                      const HedgeBudget& budget);

// Quasi-replication: hedge every state but the least likely one.
HedgeSolution solve_problem_b(const Claim& claim, const MeasurePair& measures,
                              const ScenarioTree* tree, double v0);

// Problem C as a continuous knapsack: gains m, weights q, capacity alpha.
knapsack::KnapsackInstance reduce_problem_c(const Claim& claim, const MeasurePair& measures,
                                            const HedgeBudget& budget);

HedgeSolution solve_problem_c(const Claim& claim, const MeasurePair& measures,
                              const ScenarioTree* tree, const HedgeBudget& budget);

// Problem D as a variable-bound knapsack: gains p, weights p*, capacity v,
// upper bounds h.
knapsack::KnapsackInstance reduce_problem_d(const Claim& claim, const MeasurePair& measures,
                                            const HedgeBudget& budget);

HedgeSolution solve_problem_d(const Claim& claim, const MeasurePair& measures,
                              const ScenarioTree* tree, const HedgeBudget& budget);

// ---------------------------------------------------------------------------
// Level grouping

// Items merged by a structural key. members[k] lists the original items of
// level k in ratio order; `grouped` holds the summed gains and weights.
struct GroupedInstance {
  knapsack::KnapsackInstance grouped;
  std::vector<std::int64_t> keys;
  std::vector<std::vector<std::size_t>> members;
};

GroupedInstance group_levels(const knapsack::KnapsackInstance& instance,
                             std::span<const std::int64_t> level_key);

// Greedy over whole levels, then item by item inside the critical level.
// The returned solution is expressed on the original items.
knapsack::KnapsackSolution solve_greedy_grouped(const knapsack::KnapsackInstance& instance,
                                                const GroupedInstance& levels);

// Greedy Problem A computed level by level; `level_key` holds one structural
// key per state (for binomial trees, the up-move count).
HedgeSolution solve_problem_a_grouped(const Claim& claim, const MeasurePair& measures,
                                      const ScenarioTree* tree, const HedgeBudget& budget,
                                      std::span<const std::int64_t> level_key);

// A class of identical items described only by its multiplicity.
struct LevelClass {
  std::int64_t key = 0;
  double count = 0.0;
  double unit_gain = 0.0;
  double unit_weight = 0.0;
};

struct LevelGreedyResult {
  std::vector<double> taken;  // items selected from each class
  std::optional<std::size_t> critical_level;
  double objective = 0.0;
  double dantzig_bound = 0.0;
  double error_bound = 0.0;
};

LevelGreedyResult solve_greedy_levels(std::span<const LevelClass> levels, double capacity);

// Problem A classes of a binomial model for a payoff that depends only on the
// terminal price: one class per up-move count, never enumerating paths.
struct BinomialLevels {
  std::vector<LevelClass> classes;
  double perfect_price = 0.0;
};

BinomialLevels binomial_problem_a_levels(const market::BinomialParams& params,
                                         market::OptionType type, double strike);

}  // namespace knaphedge::hedging
