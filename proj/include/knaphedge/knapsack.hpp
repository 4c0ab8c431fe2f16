#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace knaphedge::knapsack {

enum class Variant {
  binary,          // x_i in {0, 1}
  continuous,      // 0 <= x_i <= 1
  variable_bound,  // x_i <= u_i, unbounded below
};

struct KnapsackInstance {
  std::vector<double> gains;
  std::vector<double> weights;
  double capacity = 0.0;
  // Per-item upper bounds, used by the variable_bound variant only.
  std::vector<double> upper_bounds;
  Variant variant = Variant::binary;

  std::size_t size() const { return gains.size(); }

  // Checks dimensions, finiteness and sign constraints of the variant.
  void validate() const;
};

struct KnapsackSolution {
  std::vector<double> x;  // indexed like the instance items
  double objective = 0.0;
  // Critical item (original index) when the solver defines one.
  std::optional<std::size_t> critical;
  // Continuous relaxation value z*, an upper bound for the 0-1 optimum.
  std::optional<double> dantzig_bound;
  // Greedy certificate: the gain of the critical item.
  std::optional<double> error_bound;
  bool optimal = true;
  std::uint64_t nodes = 0;
};

struct SolverOptions {
  std::uint64_t node_budget = 10'000'000;
};

inline constexpr std::size_t kBruteForceLimit = 25;

// Capacity slack used when locating the critical item: 1e-12 * (1 + c).
double capacity_tolerance(double capacity);

// Objective value sum g_i x_i accumulated in item order.
double objective(const KnapsackInstance& instance, const std::vector<double>& x);
// Consumed capacity sum w_i x_i accumulated in item order.
double load(const KnapsackInstance& instance, const std::vector<double>& x);

// Items by non-increasing g_i / w_i; zero-weight items count as +inf and ties
// keep ascending original index.
std::vector<std::size_t> order_by_ratio(const KnapsackInstance& instance);

// Dantzig solution of the continuous relaxation. Requires c < sum w_i.
KnapsackSolution solve_continuous(const KnapsackInstance& instance);

// Items strictly before the critical item; error bound g_s.
KnapsackSolution solve_greedy(const KnapsackInstance& instance);

// Depth-first branch-and-bound with Dantzig bounds on real-valued data.
// Among equal optima returns the lexicographically smallest vector in ratio
// order. When the node budget runs out the best vector found is returned with
// `optimal == false`.
KnapsackSolution solve_exact_01(const KnapsackInstance& instance, const SolverOptions& options = {});

// Exhaustive enumeration oracle for n <= kBruteForceLimit, same tie-break.
KnapsackSolution brute_force_01(const KnapsackInstance& instance);

// Closed form for the variable-bound variant: in ratio order every item but
// the last sits at its upper bound and the last absorbs the remaining budget.
KnapsackSolution solve_variable_bound(const KnapsackInstance& instance);

}  // namespace knaphedge::knapsack
