#include "knaphedge/market.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "knaphedge/errors.hpp"

namespace knaphedge::market {

namespace {

constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();
constexpr double kRankThreshold = 1e-12;

// Solves a x = b. Square systems go through pivoted LU; rectangular ones take
// the minimum-norm least-squares solution. Returns the rank of `a`.
Eigen::Index solve_system(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, Eigen::VectorXd& x) {
  if (a.rows() == a.cols()) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(kRankThreshold);
    if (lu.rank() == a.rows()) {
      x = lu.solve(b);
      return lu.rank();
    }
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  cod.setThreshold(kRankThreshold);
  x = cod.solve(b);
  return cod.rank();
}

std::string node_label(std::size_t id) { return "node " + std::to_string(id); }

void check_probability_vector(const std::vector<double>& probs, const char* name) {
  double sum = 0.0;
  for (double v : probs) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw InvalidInput(std::string(name) + " must be strictly positive");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbabilityTolerance * std::max<double>(1.0, probs.size())) {
    throw InvalidInput(std::string(name) + " must sum to 1");
  }
}

Eigen::MatrixXd child_price_matrix(const ScenarioTree& tree, const Node& node) {
  const auto assets = static_cast<Eigen::Index>(tree.num_assets());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(node.children.size()), assets);
  for (std::size_t j = 0; j < node.children.size(); ++j) {
    const auto& prices = tree.node(node.children[j]).prices;
    for (Eigen::Index a = 0; a < assets; ++a) {
      x(static_cast<Eigen::Index>(j), a) = prices[static_cast<std::size_t>(a)];
    }
  }
  return x;
}

// Nodes ordered so that every parent precedes its children.
std::vector<std::size_t> breadth_first(const ScenarioTree& tree) {
  std::vector<std::size_t> order;
  order.reserve(tree.size());
  order.push_back(0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (std::size_t c : tree.node(order[k]).children) order.push_back(c);
  }
  return order;
}

// Conditional risk-neutral probabilities of node's children.
std::vector<double> one_period_measure(const ScenarioTree& tree, std::size_t id) {
  const Node& node = tree.node(id);
  const Eigen::MatrixXd x = child_price_matrix(tree, node);
  const Eigen::MatrixXd a = x.transpose();
  Eigen::VectorXd b(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) b(i) = node.prices[static_cast<std::size_t>(i)];

  Eigen::VectorXd q;
  if (solve_system(a, b, q) < x.rows()) {
    throw IncompleteMarketError("market is incomplete at " + node_label(id) +
                                ": martingale measure is not unique");
  }
  const double residual = (a * q - b).cwiseAbs().maxCoeff();
  if (residual > value_tolerance(b.cwiseAbs().maxCoeff())) {
    throw ArbitrageError("no martingale measure at " + node_label(id) +
                         ": prices admit arbitrage");
  }
  std::vector<double> out(static_cast<std::size_t>(q.size()));
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    if (!(q(j) > 0.0)) {
      throw ArbitrageError("risk-neutral probability is not strictly positive at " +
                           node_label(id));
    }
    out[static_cast<std::size_t>(j)] = q(j);
  }
  return out;
}

// Sum of terminal probabilities below each node.
std::vector<double> node_mass(const ScenarioTree& tree, std::span<const double> terminal) {
  std::vector<double> mass(tree.size(), 0.0);
  const auto order = breadth_first(tree);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Node& node = tree.node(*it);
    if (node.children.empty()) {
      mass[*it] = terminal[tree.state_of(*it)];
    } else {
      double m = 0.0;
      for (std::size_t c : node.children) m += mass[c];
      mass[*it] = m;
    }
  }
  return mass;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

double value_tolerance(double scale) { return kValueTolerance * std::max(1.0, std::abs(scale)); }

bool hedge_succeeds(double terminal_value, double payoff) {
  return terminal_value >= payoff - value_tolerance(payoff);
}

ScenarioTree::ScenarioTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw InvalidInput("scenario tree has no nodes");
  const Node& root = nodes_.front();
  if (root.time != 0) throw InvalidInput("root node must have time index 0");
  if (root.children.empty()) throw InvalidInput("scenario tree must span at least one period");
  const std::size_t assets = root.prices.size();
  if (assets == 0) throw InvalidInput("nodes must carry at least the numeraire price");

  parents_.assign(nodes_.size(), kNoParent);
  ordinal_.assign(nodes_.size(), kNoParent);
  std::vector<bool> seen(nodes_.size(), false);
  seen[0] = true;
  horizon_ = -1;

  // Depth-first in child order so that terminal ordinals follow path order.
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const std::size_t id = stack.back();
    stack.pop_back();
    const Node& node = nodes_[id];
    if (node.prices.size() != assets) {
      throw InvalidInput(node_label(id) + " has inconsistent asset count");
    }
    if (std::abs(node.prices[0] - 1.0) > kProbabilityTolerance) {
      throw InvalidInput(node_label(id) + ": numeraire price must equal 1");
    }
    for (double x : node.prices) {
      if (!std::isfinite(x) || x < 0.0) {
        throw InvalidInput(node_label(id) + " has a negative or non-finite price");
      }
    }
    if (node.children.empty()) {
      if (horizon_ < 0) horizon_ = node.time;
      if (node.time != horizon_) {
        throw InvalidInput("terminal " + node_label(id) + " is not at the common horizon");
      }
      ordinal_[id] = terminals_.size();
      terminals_.push_back(id);
      continue;
    }
    if (node.children.size() < 2) {
      throw InvalidInput(node_label(id) + " must have at least two children");
    }
    if (node.branch_probabilities.size() != node.children.size()) {
      throw InvalidInput(node_label(id) + " branch probability count mismatch");
    }
    check_probability_vector(node.branch_probabilities, "branch probabilities");
    for (std::size_t c : node.children) {
      if (c >= nodes_.size() || seen[c]) {
        throw InvalidInput(node_label(id) + " has an invalid or shared child");
      }
      if (nodes_[c].time != node.time + 1) {
        throw InvalidInput(node_label(c) + " time index does not follow its parent");
      }
      seen[c] = true;
      parents_[c] = id;
    }
    for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) stack.push_back(*it);
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
    throw InvalidInput("scenario tree has unreachable nodes");
  }
}

std::optional<std::size_t> ScenarioTree::parent(std::size_t id) const {
  const std::size_t p = parents_.at(id);
  if (p == kNoParent) return std::nullopt;
  return p;
}

std::size_t ScenarioTree::state_of(std::size_t id) const {
  const std::size_t k = ordinal_.at(id);
  if (k == kNoParent) throw InvalidInput(node_label(id) + " is not terminal");
  return k;
}

std::vector<std::size_t> ScenarioTree::path_to(std::size_t id) const {
  std::vector<std::size_t> path{id};
  while (parents_.at(path.back()) != kNoParent) path.push_back(parents_[path.back()]);
  std::reverse(path.begin(), path.end());
  return path;
}

MeasurePair::MeasurePair(std::vector<double> p, std::vector<double> p_star)
    : p_(std::move(p)), p_star_(std::move(p_star)) {
  if (p_.size() != p_star_.size()) throw InvalidInput("measure dimensions differ");
  if (p_.empty()) throw InvalidInput("measures must have at least one state");
  check_probability_vector(p_, "real-world probabilities");
  check_probability_vector(p_star_, "risk-neutral probabilities");
}

Claim::Claim(std::vector<double> payoffs) : payoffs_(std::move(payoffs)) {
  for (double h : payoffs_) {
    if (!std::isfinite(h) || h < 0.0) throw InvalidInput("claim payoffs must be finite and >= 0");
  }
}

ScenarioTree build_binomial(const BinomialParams& params) {
  const double growth = 1.0 + params.rate;
  if (!(params.s0 > 0.0)) throw InvalidInput("initial price must be positive");
  if (!(params.p_up > 0.0 && params.p_up < 1.0)) {
    throw InvalidInput("up-move probability must lie in (0, 1)");
  }
  if (params.periods < 1) throw InvalidInput("binomial tree needs at least one period");
  if (!(params.down > 0.0 && params.down < growth && growth < params.up)) {
    throw ArbitrageError("binomial factors admit arbitrage: need 0 < d < 1 + r < u");
  }

  const std::size_t count = (std::size_t{2} << params.periods) - 1;
  std::vector<Node> nodes;
  nodes.reserve(count);
  nodes.push_back(Node{0, {}, {}, {1.0, params.s0}});
  // Heap layout: children of node k are 2k+1 (up) and 2k+2 (down).
  for (std::size_t k = 0; nodes.size() < count; ++k) {
    const int t = nodes[k].time;
    const double x = nodes[k].prices[1];
    nodes[k].children = {2 * k + 1, 2 * k + 2};
    nodes[k].branch_probabilities = {params.p_up, 1.0 - params.p_up};
    nodes.push_back(Node{t + 1, {}, {}, {1.0, x * params.up / growth}});
    nodes.push_back(Node{t + 1, {}, {}, {1.0, x * params.down / growth}});
  }
  return ScenarioTree(std::move(nodes));
}

std::vector<int> binomial_up_moves(int periods) {
  if (periods < 0 || periods > 62) throw InvalidInput("period count out of range");
  const std::size_t n = std::size_t{1} << periods;
  std::vector<int> ups(n);
  for (std::size_t i = 0; i < n; ++i) {
    ups[i] = periods - std::popcount(static_cast<unsigned long long>(i));
  }
  return ups;
}

double binomial_risk_neutral_up(const BinomialParams& params) {
  return (1.0 + params.rate - params.down) / (params.up - params.down);
}

MeasurePair risk_neutral_measure(const ScenarioTree& tree) {
  const std::size_t n = tree.num_states();
  std::vector<double> p(n), p_star(n);
  std::vector<double> real(tree.size(), 1.0), neutral(tree.size(), 1.0);
  for (std::size_t id : breadth_first(tree)) {
    const Node& node = tree.node(id);
    if (node.children.empty()) {
      const std::size_t i = tree.state_of(id);
      p[i] = real[id];
      p_star[i] = neutral[id];
      continue;
    }
    const auto q = one_period_measure(tree, id);
    for (std::size_t j = 0; j < node.children.size(); ++j) {
      real[node.children[j]] = real[id] * node.branch_probabilities[j];
      neutral[node.children[j]] = neutral[id] * q[j];
    }
  }
  return MeasurePair(std::move(p), std::move(p_star));
}

double expectation(std::span<const double> values, std::span<const double> probabilities) {
  if (values.size() != probabilities.size()) throw InvalidInput("dimension mismatch");
  return dot(values, probabilities);
}

double price(const Claim& claim, const MeasurePair& measures) {
  return expectation(claim.payoffs(), measures.p_star());
}

Replication replicate(std::span<const double> payoff, const ScenarioTree& tree,
                      const MeasurePair& measures) {
  const std::size_t n = tree.num_states();
  if (payoff.size() != n || measures.size() != n) {
    throw InvalidInput("payoff dimension does not match the number of terminal states");
  }
  Replication out;
  out.strategy.holdings.assign(tree.size(), {});
  out.value.values.assign(tree.size(), 0.0);
  out.value.terminal_values.assign(payoff.begin(), payoff.end());

  const auto order = breadth_first(tree);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t id = *it;
    const Node& node = tree.node(id);
    if (node.children.empty()) {
      out.value.values[id] = payoff[tree.state_of(id)];
      continue;
    }
    const Eigen::MatrixXd x = child_price_matrix(tree, node);
    Eigen::VectorXd b(x.rows());
    for (std::size_t j = 0; j < node.children.size(); ++j) {
      b(static_cast<Eigen::Index>(j)) = out.value.values[node.children[j]];
    }
    Eigen::VectorXd xi;
    if (solve_system(x, b, xi) < x.rows()) {
      throw IncompleteMarketError("cannot replicate at " + node_label(id) +
                                  ": one-period system is singular");
    }
    auto& holding = out.strategy.holdings[id];
    holding.assign(xi.data(), xi.data() + xi.size());
    out.value.values[id] = dot(holding, node.prices);
  }
  return out;
}

bool is_admissible(const ValueProcess& vp) {
  const double tol = value_tolerance(max_abs(vp.values));
  return std::all_of(vp.values.begin(), vp.values.end(), [tol](double v) { return v >= -tol; });
}

bool is_self_financing(const Replication& replication, const ScenarioTree& tree) {
  const auto& holdings = replication.strategy.holdings;
  const auto& values = replication.value.values;
  const double tol = value_tolerance(max_abs(values));
  for (std::size_t id = 0; id < tree.size(); ++id) {
    const auto parent = tree.parent(id);
    const auto& prices = tree.node(id).prices;
    if (parent) {
      // Value of the position carried into this node.
      if (std::abs(dot(holdings[*parent], prices) - values[id]) > tol) return false;
    }
    if (!tree.is_terminal(id) && std::abs(dot(holdings[id], prices) - values[id]) > tol) {
      return false;
    }
  }
  return true;
}

bool is_martingale(const ValueProcess& vp, const ScenarioTree& tree, const MeasurePair& measures) {
  const auto mass = node_mass(tree, measures.p_star());
  const double tol = value_tolerance(max_abs(vp.values));
  for (std::size_t id = 0; id < tree.size(); ++id) {
    const Node& node = tree.node(id);
    if (node.children.empty()) continue;
    double expected = 0.0;
    for (std::size_t c : node.children) expected += mass[c] / mass[id] * vp.values[c];
    if (std::abs(expected - vp.values[id]) > tol) return false;
  }
  return true;
}

double success_probability(std::span<const double> terminal_values, const Claim& claim,
                           const MeasurePair& measures) {
  if (terminal_values.size() != claim.size() || claim.size() != measures.size()) {
    throw InvalidInput("dimension mismatch");
  }
  double prob = 0.0;
  for (std::size_t i = 0; i < claim.size(); ++i) {
    if (hedge_succeeds(terminal_values[i], claim[i])) prob += measures.p()[i];
  }
  return prob;
}

double success_probability(const ValueProcess& vp, const Claim& claim,
                           const MeasurePair& measures) {
  return success_probability(vp.terminal_values, claim, measures);
}

double expected_shortfall(std::span<const double> terminal_values, const Claim& claim,
                          const MeasurePair& measures) {
  if (terminal_values.size() != claim.size() || claim.size() != measures.size()) {
    throw InvalidInput("dimension mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < claim.size(); ++i) {
    total += measures.p()[i] * std::max(claim[i] - terminal_values[i], 0.0);
  }
  return total;
}

double expected_shortfall(const ValueProcess& vp, const Claim& claim,
                          const MeasurePair& measures) {
  return expected_shortfall(vp.terminal_values, claim, measures);
}

Claim vanilla_claim(const ScenarioTree& tree, OptionType type, double strike, double discount,
                    std::size_t asset) {
  if (asset == 0 || asset >= tree.num_assets()) throw InvalidInput("invalid underlying asset");
  const double k = strike * discount;
  std::vector<double> h;
  h.reserve(tree.num_states());
  for (std::size_t id : tree.terminal_nodes()) {
    const double x = tree.node(id).prices[asset];
    h.push_back(type == OptionType::call ? std::max(x - k, 0.0) : std::max(k - x, 0.0));
  }
  return Claim(std::move(h));
}

}  // namespace knaphedge::market
