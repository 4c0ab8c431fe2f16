#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace knaphedge::market {

// Monetary comparisons are relative to the magnitude of the values involved.
inline constexpr double kValueTolerance = 1e-9;
inline constexpr double kProbabilityTolerance = 1e-12;

// Tolerance for comparing monetary amounts of magnitude `scale`.
double value_tolerance(double scale);

struct Node {
  int time = 0;
  std::vector<std::size_t> children;
  // Real-world conditional probability of moving to children[j].
  std::vector<double> branch_probabilities;
  // Discounted asset prices (1, X^(1), ..., X^(d)); entry 0 is the numeraire.
  std::vector<double> prices;
};

// Finite filtered market as an explicit tree of paths. Node 0 is the root and
// terminal nodes are numbered 0..n-1 in depth-first, child-order sequence.
class ScenarioTree {
 public:
  explicit ScenarioTree(std::vector<Node> nodes);

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }
  const std::vector<Node>& nodes() const { return nodes_; }

  // Number of assets including the numeraire (d + 1).
  std::size_t num_assets() const { return nodes_.front().prices.size(); }
  int horizon() const { return horizon_; }
  std::size_t num_states() const { return terminals_.size(); }

  bool is_terminal(std::size_t id) const { return nodes_.at(id).children.empty(); }
  std::optional<std::size_t> parent(std::size_t id) const;
  // Node id of terminal state `ordinal`.
  std::size_t terminal_node(std::size_t ordinal) const { return terminals_.at(ordinal); }
  const std::vector<std::size_t>& terminal_nodes() const { return terminals_; }
  // Terminal ordinal of a terminal node.
  std::size_t state_of(std::size_t id) const;
  // Nodes from the root down to (and including) `id`.
  std::vector<std::size_t> path_to(std::size_t id) const;

 private:
  std::vector<Node> nodes_;
  std::vector<std::size_t> parents_;
  std::vector<std::size_t> terminals_;
  std::vector<std::size_t> ordinal_;
  int horizon_ = 0;
};

// Real-world and risk-neutral probabilities of the terminal states.
class MeasurePair {
 public:
  MeasurePair(std::vector<double> p, std::vector<double> p_star);

  const std::vector<double>& p() const { return p_; }
  const std::vector<double>& p_star() const { return p_star_; }
  std::size_t size() const { return p_.size(); }

 private:
  std::vector<double> p_;
  std::vector<double> p_star_;
};

// Discounted non-negative European payoff, one entry per terminal state.
class Claim {
 public:
  explicit Claim(std::vector<double> payoffs);

  const std::vector<double>& payoffs() const { return payoffs_; }
  std::size_t size() const { return payoffs_.size(); }
  double operator[](std::size_t i) const { return payoffs_[i]; }

 private:
  std::vector<double> payoffs_;
};

// Holdings per node; the vector stored at node v is held over the period
// leading into v's children. Terminal nodes carry an empty vector.
struct Strategy {
  std::vector<std::vector<double>> holdings;
};

struct ValueProcess {
  std::vector<double> values;           // per node
  std::vector<double> terminal_values;  // per terminal state
  double initial() const { return values.front(); }
};

struct Replication {
  Strategy strategy;
  ValueProcess value;
};

struct BinomialParams {
  double s0 = 100.0;
  double up = 1.2;
  double down = 0.8;
  double rate = 0.0;  // per period
  double p_up = 0.5;
  int periods = 1;
};

// Path-explicit binomial tree with one risky asset. Children are ordered
// (up, down), so terminal ordinal bits read from the most significant end
// give the path with 0 = up.
ScenarioTree build_binomial(const BinomialParams& params);

// Number of up-moves on each terminal path of build_binomial(periods).
std::vector<int> binomial_up_moves(int periods);

// Risk-neutral one-period probability (1 + r - d) / (u - d).
double binomial_risk_neutral_up(const BinomialParams& params);

MeasurePair risk_neutral_measure(const ScenarioTree& tree);

double expectation(std::span<const double> values, std::span<const double> probabilities);
double price(const Claim& claim, const MeasurePair& measures);

// Self-financing strategy whose terminal value equals `payoff` (which may be
// negative) in every state.
Replication replicate(std::span<const double> payoff, const ScenarioTree& tree,
                      const MeasurePair& measures);

bool is_admissible(const ValueProcess& vp);
bool is_self_financing(const Replication& replication, const ScenarioTree& tree);
bool is_martingale(const ValueProcess& vp, const ScenarioTree& tree, const MeasurePair& measures);

double success_probability(std::span<const double> terminal_values, const Claim& claim,
                           const MeasurePair& measures);
double success_probability(const ValueProcess& vp, const Claim& claim, const MeasurePair& measures);

double expected_shortfall(std::span<const double> terminal_values, const Claim& claim,
                          const MeasurePair& measures);
double expected_shortfall(const ValueProcess& vp, const Claim& claim, const MeasurePair& measures);

// Whether V_T >= h - tol for a single state.
bool hedge_succeeds(double terminal_value, double payoff);

enum class OptionType { call, put };

// Discounted vanilla payoff on asset `asset`; `discount` is the numeraire
// discount factor at maturity applied to the strike.
Claim vanilla_claim(const ScenarioTree& tree, OptionType type, double strike, double discount,
                    std::size_t asset = 1);

}  // namespace knaphedge::market
