#include "knaphedge/knapsack.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>

#include "knaphedge/errors.hpp"

namespace knaphedge::knapsack {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

bool is_dropped(const KnapsackInstance& inst, std::size_t i) {
  return inst.gains[i] == 0.0 && inst.weights[i] == 0.0;
}

double ratio(double gain, double weight) { return weight == 0.0 ? kInfinity : gain / weight; }

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

void require_01_variant(const KnapsackInstance& inst) {
  if (inst.variant == Variant::variable_bound) {
    throw InvalidInput("solver needs a binary or continuous knapsack instance");
  }
}

// Position of the critical item in ratio order together with the weight
// consumed by the items before it.
struct CriticalSplit {
  std::vector<std::size_t> order;  // active items only
  std::size_t position = 0;
  double filled = 0.0;
};

CriticalSplit find_critical(const KnapsackInstance& inst) {
  if (!(inst.capacity < sum(inst.weights))) {
    throw InvalidInput("capacity must be strictly below the total weight");
  }
  CriticalSplit split;
  for (std::size_t i : order_by_ratio(inst)) {
    if (!is_dropped(inst, i)) split.order.push_back(i);
  }
  const double limit = inst.capacity + capacity_tolerance(inst.capacity);
  for (; split.position < split.order.size(); ++split.position) {
    const double w = inst.weights[split.order[split.position]];
    if (split.filled + w > limit) return split;
    split.filled += w;
  }
  throw InvalidInput("capacity covers every item within tolerance; no critical item exists");
}

// Depth-first branch and bound over the active items in ratio order.
class BranchAndBound {
 public:
  BranchAndBound(const KnapsackInstance& inst, const SolverOptions& options)
      : inst_(inst), budget_(options.node_budget) {
    for (std::size_t i : order_by_ratio(inst)) {
      if (!is_dropped(inst, i)) order_.push_back(i);
    }
    const std::size_t m = order_.size();
    prefix_w_.assign(m + 1, 0.0);
    prefix_g_.assign(m + 1, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      prefix_w_[k + 1] = prefix_w_[k] + inst.weights[order_[k]];
      prefix_g_[k + 1] = prefix_g_[k] + inst.gains[order_[k]];
    }
    limit_ = inst.capacity + capacity_tolerance(inst.capacity);
    const double eps = std::numeric_limits<double>::epsilon();
    // Incremental sums may differ from the canonical ones by rounding.
    search_limit_ = limit_ + 4.0 * eps * static_cast<double>(m + 1) * (1.0 + prefix_w_[m]);
    slack_ = 4.0 * eps * static_cast<double>(m + 1) * (1.0 + prefix_g_[m]);
    current_.assign(inst.size(), 0.0);
    best_.assign(inst.size(), 0.0);
  }

  KnapsackSolution run() {
    seed_incumbent();
    search(0, 0.0, 0.0);
    KnapsackSolution out;
    out.x = best_;
    out.objective = best_z_;
    out.optimal = !exhausted_;
    out.nodes = nodes_;
    return out;
  }

 private:
  void seed_incumbent() {
    std::vector<double> x(inst_.size(), 0.0);
    double w = 0.0;
    for (std::size_t i : order_) {
      if (w + inst_.weights[i] > limit_) break;
      w += inst_.weights[i];
      x[i] = 1.0;
    }
    consider(x);
  }

  // Canonical evaluation; replaces the incumbent on strict improvement or on
  // an equal objective with a lexicographically smaller vector.
  void consider(const std::vector<double>& x) {
    if (load(inst_, x) > limit_) return;
    const double z = objective(inst_, x);
    if (has_best_ && (z < best_z_ || (z == best_z_ && !lex_smaller(x, best_)))) return;
    best_ = x;
    best_z_ = z;
    has_best_ = true;
  }

  bool lex_smaller(const std::vector<double>& a, const std::vector<double>& b) const {
    for (std::size_t i : order_) {
      if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
  }

  double dantzig(std::size_t k, double room) const {
    room = std::max(room, 0.0);
    const double base = prefix_w_[k];
    const auto first = prefix_w_.begin() + static_cast<std::ptrdiff_t>(k);
    const auto it = std::upper_bound(first, prefix_w_.end(), base + room);
    const std::size_t j = static_cast<std::size_t>(it - prefix_w_.begin()) - 1;
    double bound = prefix_g_[j] - prefix_g_[k];
    if (j < order_.size()) {
      const std::size_t item = order_[j];
      const double w = inst_.weights[item];
      if (w > 0.0) bound += std::min(1.0, (room - (prefix_w_[j] - base)) / w) * inst_.gains[item];
    }
    return bound;
  }

  void search(std::size_t k, double weight, double gain) {
    if (exhausted_) return;
    if (++nodes_ > budget_) {
      exhausted_ = true;
      return;
    }
    if (k == order_.size()) {
      consider(current_);
      return;
    }
    if (gain + dantzig(k, search_limit_ - weight) + slack_ < best_z_) return;
    const std::size_t item = order_[k];
    search(k + 1, weight, gain);
    if (weight + inst_.weights[item] <= search_limit_) {
      current_[item] = 1.0;
      search(k + 1, weight + inst_.weights[item], gain + inst_.gains[item]);
      current_[item] = 0.0;
    }
  }

  const KnapsackInstance& inst_;
  std::uint64_t budget_;
  std::vector<std::size_t> order_;
  std::vector<double> prefix_w_;
  std::vector<double> prefix_g_;
  double limit_ = 0.0;
  double search_limit_ = 0.0;
  double slack_ = 0.0;
  std::vector<double> current_;
  std::vector<double> best_;
  double best_z_ = 0.0;
  bool has_best_ = false;
  bool exhausted_ = false;
  std::uint64_t nodes_ = 0;
};

}  // namespace

void KnapsackInstance::validate() const {
  if (weights.size() != gains.size()) throw InvalidInput("gains and weights differ in length");
  if (!std::isfinite(capacity)) throw InvalidInput("capacity must be finite");
  for (std::size_t i = 0; i < gains.size(); ++i) {
    if (!std::isfinite(gains[i]) || !std::isfinite(weights[i])) {
      throw InvalidInput("item " + std::to_string(i) + " has a non-finite gain or weight");
    }
    if (gains[i] < 0.0 || weights[i] < 0.0) {
      throw InvalidInput("item " + std::to_string(i) + " has a negative gain or weight");
    }
  }
  if (variant == Variant::variable_bound) {
    if (upper_bounds.size() != gains.size()) throw InvalidInput("upper bound count mismatch");
    for (std::size_t i = 0; i < gains.size(); ++i) {
      if (!std::isfinite(upper_bounds[i]) || upper_bounds[i] < 0.0) {
        throw InvalidInput("item " + std::to_string(i) + " has an invalid upper bound");
      }
      if (!(weights[i] > 0.0)) {
        throw InvalidInput("variable-bound items need strictly positive weights");
      }
    }
  } else if (capacity < 0.0) {
    throw InvalidInput("capacity must be non-negative");
  }
}

double capacity_tolerance(double capacity) { return 1e-12 * (1.0 + std::abs(capacity)); }

double objective(const KnapsackInstance& instance, const std::vector<double>& x) {
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) z += instance.gains[i] * x[i];
  return z;
}

double load(const KnapsackInstance& instance, const std::vector<double>& x) {
  double w = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) w += instance.weights[i] * x[i];
  return w;
}

std::vector<std::size_t> order_by_ratio(const KnapsackInstance& instance) {
  std::vector<std::size_t> order(instance.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> r(instance.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = ratio(instance.gains[i], instance.weights[i]);
  std::stable_sort(order.begin(), order.end(),
                   [&r](std::size_t a, std::size_t b) { return r[a] > r[b]; });
  return order;
}

KnapsackSolution solve_continuous(const KnapsackInstance& instance) {
  instance.validate();
  require_01_variant(instance);
  const CriticalSplit split = find_critical(instance);
  KnapsackSolution out;
  out.x.assign(instance.size(), 0.0);
  for (std::size_t k = 0; k < split.position; ++k) out.x[split.order[k]] = 1.0;
  const std::size_t s = split.order[split.position];
  out.x[s] = std::clamp((instance.capacity - split.filled) / instance.weights[s], 0.0, 1.0);
  out.objective = objective(instance, out.x);
  out.critical = s;
  out.dantzig_bound = out.objective;
  out.error_bound = instance.gains[s];
  return out;
}

KnapsackSolution solve_greedy(const KnapsackInstance& instance) {
  instance.validate();
  require_01_variant(instance);
  const CriticalSplit split = find_critical(instance);
  KnapsackSolution out;
  out.x.assign(instance.size(), 0.0);
  for (std::size_t k = 0; k < split.position; ++k) out.x[split.order[k]] = 1.0;
  const std::size_t s = split.order[split.position];
  out.objective = objective(instance, out.x);
  out.critical = s;
  out.error_bound = instance.gains[s];
  std::vector<double> relaxed = out.x;
  relaxed[s] = std::clamp((instance.capacity - split.filled) / instance.weights[s], 0.0, 1.0);
  out.dantzig_bound = objective(instance, relaxed);
  return out;
}

KnapsackSolution solve_exact_01(const KnapsackInstance& instance, const SolverOptions& options) {
  instance.validate();
  require_01_variant(instance);
  KnapsackSolution out = BranchAndBound(instance, options).run();
  if (instance.capacity < sum(instance.weights)) {
    try {
      out.dantzig_bound = solve_continuous(instance).objective;
    } catch (const InvalidInput&) {
      // Capacity within tolerance of the total weight: no fractional item.
    }
  }
  return out;
}

KnapsackSolution brute_force_01(const KnapsackInstance& instance) {
  instance.validate();
  require_01_variant(instance);
  const std::size_t n = instance.size();
  if (n > kBruteForceLimit) {
    throw InvalidInput("brute force is limited to " + std::to_string(kBruteForceLimit) + " items");
  }
  const auto order = order_by_ratio(instance);
  // Bit of item i in a key whose most significant bit is the first item in
  // ratio order; smaller key means lexicographically smaller vector.
  std::vector<std::uint32_t> key_bit(n);
  for (std::size_t pos = 0; pos < n; ++pos) key_bit[order[pos]] = std::uint32_t{1} << (n - 1 - pos);

  const double limit = instance.capacity + capacity_tolerance(instance.capacity);
  std::uint32_t best_mask = 0;
  std::uint32_t best_key = 0;
  double best_z = 0.0;
  bool found = false;
  const std::uint32_t total = std::uint32_t{1} << n;
  for (std::uint32_t mask = 0; mask < total; ++mask) {
    double w = 0.0;
    double z = 0.0;
    std::uint32_t key = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1U) {
        w += instance.weights[i];
        z += instance.gains[i];
        key |= key_bit[i];
      }
    }
    if (w > limit) continue;
    if (!found || z > best_z || (z == best_z && key < best_key)) {
      found = true;
      best_mask = mask;
      best_key = key;
      best_z = z;
    }
  }
  KnapsackSolution out;
  out.x.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) out.x[i] = (best_mask >> i & 1U) ? 1.0 : 0.0;
  out.objective = objective(instance, out.x);
  out.nodes = total;
  return out;
}

KnapsackSolution solve_variable_bound(const KnapsackInstance& instance) {
  instance.validate();
  if (instance.variant != Variant::variable_bound) {
    throw InvalidInput("solver needs a variable-bound knapsack instance");
  }
  if (instance.size() == 0) throw InvalidInput("variable-bound instance has no items");
  const auto order = order_by_ratio(instance);
  KnapsackSolution out;
  out.x.assign(instance.size(), 0.0);
  double committed = 0.0;
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    const std::size_t i = order[k];
    out.x[i] = instance.upper_bounds[i];
    committed += instance.upper_bounds[i] * instance.weights[i];
  }
  const std::size_t last = order.back();
  const double fill = (instance.capacity - committed) / instance.weights[last];
  // A budget above sum u_i w_i cannot be spent without breaking a bound.
  out.x[last] = std::min(fill, instance.upper_bounds[last]);
  out.objective = objective(instance, out.x);
  out.critical = last;
  return out;
}

}  // namespace knaphedge::knapsack
