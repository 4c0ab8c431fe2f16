#include "knaphedge/knapsack.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "knaphedge/errors.hpp"
#include "oracles.hpp"

namespace knaphedge::knapsack {
namespace {

KnapsackInstance binary(std::vector<double> g, std::vector<double> w, double c) {
  return KnapsackInstance{std::move(g), std::move(w), c, {}, Variant::binary};
}

KnapsackInstance random_binary(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  KnapsackInstance inst = binary(std::vector<double>(n), std::vector<double>(n), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    inst.gains[i] = unit(rng);
    inst.weights[i] = unit(rng);
  }
  const double total = std::accumulate(inst.weights.begin(), inst.weights.end(), 0.0);
  do {
    inst.capacity = unit(rng) * total;
  } while (inst.capacity <= 0.0);
  return inst;
}

TEST(OrderByRatio, SortsDescendingWithStableTies) {
  EXPECT_EQ(order_by_ratio(binary({1, 2, 3}, {1, 1, 1}, 1)), (std::vector<std::size_t>{2, 1, 0}));
  EXPECT_EQ(order_by_ratio(binary({1, 2, 1}, {1, 2, 1}, 1)), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(order_by_ratio(binary({0.6, 0.4}, {1.0, 0.0}, 0.5)),
            (std::vector<std::size_t>{1, 0}));
}

TEST(Continuous, TextbookInstance) {
  const KnapsackSolution s = solve_continuous(binary({60, 100, 120}, {10, 20, 30}, 50));
  EXPECT_DOUBLE_EQ(s.objective, 240.0);
  EXPECT_EQ(s.critical, 2u);
  EXPECT_DOUBLE_EQ(s.x[2], 2.0 / 3.0);
  EXPECT_EQ(s.error_bound, 120.0);
}

TEST(Continuous, RequiresCapacityBelowTotalWeight) {
  EXPECT_THROW(solve_continuous(binary({1, 1}, {1, 1}, 2)), InvalidInput);
  EXPECT_THROW(solve_continuous(binary({1, 1}, {1, 1}, 2 - 1e-14)), InvalidInput);
}

TEST(Greedy, TextbookInstance) {
  const KnapsackSolution s = solve_greedy(binary({60, 100, 120}, {10, 20, 30}, 50));
  EXPECT_DOUBLE_EQ(s.objective, 160.0);
  EXPECT_EQ(s.critical, 2u);
  EXPECT_DOUBLE_EQ(*s.dantzig_bound, 240.0);
  EXPECT_DOUBLE_EQ(*s.error_bound, 120.0);
}

TEST(Greedy, ZeroWeightItemsComeFirst) {
  // Gains p = (0.6, 0.4), weights q = (1, 0), capacity 0.5.
  const KnapsackSolution s = solve_greedy(binary({0.6, 0.4}, {1.0, 0.0}, 0.5));
  EXPECT_EQ(s.x, (std::vector<double>{0.0, 1.0}));
  EXPECT_DOUBLE_EQ(s.objective, 0.4);
  EXPECT_DOUBLE_EQ(*s.dantzig_bound, 0.7);
  EXPECT_DOUBLE_EQ(*s.error_bound, 0.6);
  EXPECT_EQ(s.critical, 0u);
}

TEST(Greedy, ItemFittingExactlyIsTaken) {
  const KnapsackSolution s = solve_greedy(binary({3, 1}, {0.5, 0.5}, 0.5));
  EXPECT_EQ(s.x, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(s.critical, 1u);
}

TEST(Exact, TextbookInstance) {
  const KnapsackSolution s = solve_exact_01(binary({60, 100, 120}, {10, 20, 30}, 50));
  EXPECT_DOUBLE_EQ(s.objective, 220.0);
  EXPECT_EQ(s.x, (std::vector<double>{0.0, 1.0, 1.0}));
  EXPECT_TRUE(s.optimal);
  EXPECT_DOUBLE_EQ(*s.dantzig_bound, 240.0);
}

TEST(Exact, TieBreakIsLexicographicallySmallestInRatioOrder) {
  const auto inst = binary({0.5, 0.3, 0.2}, {0.5, 0.3, 0.2}, 0.5);
  const std::vector<double> expected{0.0, 1.0, 1.0};
  EXPECT_EQ(solve_exact_01(inst).x, expected);
  EXPECT_EQ(brute_force_01(inst).x, expected);
}

TEST(Exact, ZeroCapacityTakesOnlyFreeItems) {
  const KnapsackSolution s = solve_exact_01(binary({0.3, 0.2, 0.0}, {0.4, 0.0, 0.0}, 0.0));
  EXPECT_EQ(s.x, (std::vector<double>{0.0, 1.0, 0.0}));
  EXPECT_DOUBLE_EQ(s.objective, 0.2);
}

TEST(Exact, NodeBudgetExhaustionIsReported) {
  std::mt19937_64 rng(3);
  const KnapsackSolution s = solve_exact_01(random_binary(rng, 20), SolverOptions{3});
  EXPECT_FALSE(s.optimal);
  EXPECT_LE(s.nodes, 4u);
}

TEST(BruteForce, RejectsLargeInstances) {
  EXPECT_THROW(brute_force_01(binary(std::vector<double>(26, 1.0), std::vector<double>(26, 1.0), 1)),
               InvalidInput);
}

TEST(Validate, RejectsBadInstances) {
  EXPECT_THROW(solve_greedy(binary({1, 2}, {1}, 1)), InvalidInput);
  EXPECT_THROW(solve_greedy(binary({-1, 2}, {1, 1}, 1)), InvalidInput);
  EXPECT_THROW(solve_greedy(binary({std::nan(""), 2}, {1, 1}, 1)), InvalidInput);
  EXPECT_THROW(solve_greedy(binary({1, 2}, {1, 1}, -1)), InvalidInput);
  KnapsackInstance vb{{1.0}, {0.0}, 1.0, {1.0}, Variant::variable_bound};
  EXPECT_THROW(solve_variable_bound(vb), InvalidInput);
  EXPECT_THROW(solve_greedy(KnapsackInstance{{1.0}, {1.0}, 0.5, {1.0}, Variant::variable_bound}),
               InvalidInput);
}

TEST(VariableBound, HandSolutions) {
  // Two states: the better ratio sits at its bound, the other absorbs the rest.
  const KnapsackSolution two =
      solve_variable_bound(KnapsackInstance{{0.6, 0.4}, {0.5, 0.5}, 5.0, {20.0, 0.0},
                                            Variant::variable_bound});
  EXPECT_NEAR(two.x[0], 20.0, 1e-12);
  EXPECT_NEAR(two.x[1], -10.0, 1e-12);
  EXPECT_NEAR(two.objective, 8.0, 1e-12);
  EXPECT_EQ(two.critical, 1u);

  const KnapsackSolution one = solve_variable_bound(
      KnapsackInstance{{1.0}, {0.5}, 2.0, {10.0}, Variant::variable_bound});
  EXPECT_NEAR(one.x[0], 4.0, 1e-12);
}

TEST(VariableBound, LastOfEqualRatiosAbsorbs) {
  const KnapsackSolution s = solve_variable_bound(
      KnapsackInstance{{0.5, 0.5}, {0.5, 0.5}, 1.0, {3.0, 3.0}, Variant::variable_bound});
  EXPECT_EQ(s.critical, 1u);
  EXPECT_NEAR(s.x[0], 3.0, 1e-12);
  EXPECT_NEAR(s.x[1], -1.0, 1e-12);
}

TEST(Properties, ExactMatchesBruteForce) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = random_binary(rng, 1 + static_cast<std::size_t>(trial % 16));
    const KnapsackSolution exact = solve_exact_01(inst);
    const KnapsackSolution oracle = brute_force_01(inst);
    ASSERT_TRUE(exact.optimal);
    EXPECT_EQ(exact.objective, oracle.objective) << "trial " << trial;
    EXPECT_EQ(exact.x, oracle.x) << "trial " << trial;
  }
}

TEST(Properties, SandwichAndFeasibility) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = random_binary(rng, 1 + static_cast<std::size_t>(trial % 18));
    const KnapsackSolution greedy = solve_greedy(inst);
    const KnapsackSolution exact = solve_exact_01(inst);
    const KnapsackSolution relaxed = solve_continuous(inst);
    EXPECT_LE(greedy.objective, exact.objective);
    EXPECT_LE(exact.objective, relaxed.objective + 1e-12);
    EXPECT_LE(relaxed.objective, greedy.objective + *greedy.error_bound + 1e-12);
    EXPECT_LE(load(inst, greedy.x), inst.capacity + capacity_tolerance(inst.capacity));
    EXPECT_LE(load(inst, exact.x), inst.capacity + capacity_tolerance(inst.capacity));
    EXPECT_NEAR(load(inst, relaxed.x), inst.capacity, 1e-12);
    // Greedy stops only because the critical item does not fit.
    EXPECT_GT(load(inst, greedy.x) + inst.weights[*greedy.critical], inst.capacity);
  }
}

TEST(Properties, ContinuousMatchesVertexEnumeration) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = random_binary(rng, 1 + static_cast<std::size_t>(trial % 10));
    const double oracle =
        testing::continuous_knapsack_vertices(inst.gains, inst.weights, inst.capacity);
    EXPECT_NEAR(solve_continuous(inst).objective, oracle, 1e-12);
  }
}

TEST(Properties, PermutationInvariance) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = random_binary(rng, 2 + static_cast<std::size_t>(trial % 12));
    std::vector<std::size_t> perm(inst.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    KnapsackInstance shuffled = inst;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      shuffled.gains[i] = inst.gains[perm[i]];
      shuffled.weights[i] = inst.weights[perm[i]];
    }
    EXPECT_NEAR(solve_exact_01(shuffled).objective, solve_exact_01(inst).objective, 1e-12);
    EXPECT_NEAR(solve_continuous(shuffled).objective, solve_continuous(inst).objective, 1e-12);
  }
}

TEST(Properties, PowerOfTwoScalingPreservesDecisions) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = random_binary(rng, 1 + static_cast<std::size_t>(trial % 14));
    KnapsackInstance scaled = inst;
    for (double& g : scaled.gains) g *= 8.0;
    const KnapsackSolution a = solve_exact_01(inst);
    const KnapsackSolution b = solve_exact_01(scaled);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(8.0 * a.objective, b.objective);
    EXPECT_EQ(solve_greedy(inst).x, solve_greedy(scaled).x);
  }
}

TEST(Properties, VariableBoundMatchesVertexEnumeration) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 6);
    KnapsackInstance inst{testing::random_simplex(rng, n), testing::random_simplex(rng, n), 0.0,
                          std::vector<double>(n), Variant::variable_bound};
    double full = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      inst.upper_bounds[i] = 30.0 * unit(rng);
      full += inst.upper_bounds[i] * inst.weights[i];
    }
    inst.capacity = full * unit(rng);
    const double oracle = testing::variable_bound_vertices(inst.gains, inst.weights,
                                                           inst.upper_bounds, inst.capacity);
    const KnapsackSolution s = solve_variable_bound(inst);
    EXPECT_NEAR(s.objective, oracle, 1e-9);
    EXPECT_NEAR(load(inst, s.x), inst.capacity, 1e-9);
    for (std::size_t i = 0; i < n; ++i) EXPECT_LE(s.x[i], inst.upper_bounds[i]);
  }
}

}  // namespace
}  // namespace knaphedge::knapsack
