#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "entromap/common.hpp"
#include "entromap/lasso.hpp"

namespace entromap {

/// A step of probability flow between two distinct nodes.
struct Arc {
  int node;
  double flow;
};

/// Flow network the module search runs on: node visit rates plus flow
/// (visit rate times transition probability) along each arc. Self-flow is
/// not represented; it never crosses a module boundary.
struct FlowGraph {
  std::vector<double> visit;
  std::vector<std::vector<Arc>> out;
  std::vector<std::vector<Arc>> in;
  std::vector<double> out_total;

  int size() const { return static_cast<int>(visit.size()); }

  void finalize() {
    out_total.assign(visit.size(), 0.0);
    in.assign(visit.size(), {});
    for (int i = 0; i < size(); ++i) {
      for (const auto& a : out[static_cast<std::size_t>(i)]) {
        out_total[static_cast<std::size_t>(i)] += a.flow;
        in[static_cast<std::size_t>(a.node)].push_back({i, a.flow});
      }
    }
  }
};

/// Bipartite random-walk system of a directed stock network. Node s is the
/// out-role copy of stock s, node N + s its in-role copy.
struct FlowSystem {
  int n_stocks = 0;
  /// transition[src] holds (dst, probability); every active column sums to one.
  std::vector<std::vector<std::pair<int, double>>> transition;
  std::vector<double> visit;
  std::vector<bool> active;
  FlowGraph graph;
  /// Sum of plogp(visit) over all nodes, constant for every partition.
  double node_term = 0.0;

  int n_flow() const { return 2 * n_stocks; }
  int out_copy(int stock) const { return stock; }
  int in_copy(int stock) const { return n_stocks + stock; }
  int active_count() const { return static_cast<int>(std::count(active.begin(), active.end(), true)); }

  /// Pi * x over the sparse columns.
  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t j = 0; j < transition.size(); ++j) {
      if (x[j] == 0.0) continue;
      for (auto [i, p] : transition[j]) y[static_cast<std::size_t>(i)] += p * x[j];
    }
    return y;
  }
};

struct PowerIterationOptions {
  double tolerance = 1e-12;
  int max_iterations = 100000;
};

/// Builds V = [[0, A], [A', 0]], normalizes columns into Pi and finds the
/// stationary visit rates by power iteration on (Pi + Pi^2) / 2, which
/// removes the period-2 oscillation of the bipartite walk.
inline FlowSystem build_flow_system(const DirectedAdjacency& adj, const PowerIterationOptions& opt = {}) {
  if (adj.edge_count() == 0) throw Error("flow system: adjacency has no edges");
  FlowSystem fs;
  fs.n_stocks = adj.n;
  const int n = fs.n_flow();
  fs.transition.assign(static_cast<std::size_t>(n), {});
  // Column out_copy(i) of V has ones at in_copy(j) for every link i -> j;
  // column in_copy(j) has ones at out_copy(i).
  for (auto [i, j] : adj.entries) {
    fs.transition[static_cast<std::size_t>(fs.out_copy(i))].emplace_back(fs.in_copy(j), 1.0);
    fs.transition[static_cast<std::size_t>(fs.in_copy(j))].emplace_back(fs.out_copy(i), 1.0);
  }
  fs.active.assign(static_cast<std::size_t>(n), false);
  for (int j = 0; j < n; ++j) {
    auto& col = fs.transition[static_cast<std::size_t>(j)];
    std::sort(col.begin(), col.end());
    const double sum = static_cast<double>(col.size());
    for (auto& entry : col) entry.second /= sum;
    fs.active[static_cast<std::size_t>(j)] = !col.empty();
  }

  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  const double start = 1.0 / fs.active_count();
  for (int j = 0; j < n; ++j) {
    if (fs.active[static_cast<std::size_t>(j)]) x[static_cast<std::size_t>(j)] = start;
  }
  bool converged = false;
  for (int it = 0; it < opt.max_iterations && !converged; ++it) {
    auto y = fs.apply(x);
    auto z = fs.apply(y);
    double diff = 0.0, sum = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double next = 0.5 * (y[k] + z[k]);
      diff = std::max(diff, std::abs(next - x[k]));
      x[k] = next;
      sum += next;
    }
    for (auto& v : x) v /= sum;
    converged = diff <= opt.tolerance;
  }
  if (!converged) throw Error("flow system: power iteration did not converge");
  fs.visit = std::move(x);

  fs.graph.visit = fs.visit;
  fs.graph.out.assign(static_cast<std::size_t>(n), {});
  for (int j = 0; j < n; ++j) {
    for (auto [i, p] : fs.transition[static_cast<std::size_t>(j)]) {
      if (i != j) fs.graph.out[static_cast<std::size_t>(j)].push_back({i, p * fs.visit[static_cast<std::size_t>(j)]});
    }
  }
  fs.graph.finalize();
  for (double p : fs.visit) fs.node_term += plogp(p);
  return fs;
}

/// Shannon entropy in bits.
inline double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v < 0.0) throw Error("entropy: negative probability");
    h -= plogp(v);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Incremental module bookkeeping

namespace detail {

/// Per-module exit and visit totals over a FlowGraph, with the running sums
/// the two-level codelength needs. Module ids are slots in [0, slots); a slot
/// may be empty. Nodes with module -1 are outside the walk.
class ModuleState {
 public:
  ModuleState() = default;

  ModuleState(const FlowGraph& g, std::vector<int> module_of, int slots, double node_term)
      : g_(&g), module_of_(std::move(module_of)), node_term_(node_term) {
    exit_.assign(static_cast<std::size_t>(slots), 0.0);
    flow_.assign(static_cast<std::size_t>(slots), 0.0);
    size_.assign(static_cast<std::size_t>(slots), 0);
    for (int v = 0; v < g.size(); ++v) {
      const int m = module_of_[static_cast<std::size_t>(v)];
      if (m < 0) continue;
      if (m >= slots) throw Error("module id out of range");
      flow_[static_cast<std::size_t>(m)] += g.visit[static_cast<std::size_t>(v)];
      ++size_[static_cast<std::size_t>(m)];
      for (const auto& a : g.out[static_cast<std::size_t>(v)]) {
        if (module_of_[static_cast<std::size_t>(a.node)] != m) exit_[static_cast<std::size_t>(m)] += a.flow;
      }
    }
    recompute_sums();
  }

  static ModuleState singletons(const FlowGraph& g, double node_term) {
    std::vector<int> m(static_cast<std::size_t>(g.size()));
    for (int v = 0; v < g.size(); ++v) m[static_cast<std::size_t>(v)] = v;
    return ModuleState(g, std::move(m), g.size(), node_term);
  }

  int slots() const { return static_cast<int>(exit_.size()); }
  int module_of(int v) const { return module_of_[static_cast<std::size_t>(v)]; }
  const std::vector<int>& assignment() const { return module_of_; }
  double exit(int m) const { return exit_[static_cast<std::size_t>(m)]; }
  double flow(int m) const { return flow_[static_cast<std::size_t>(m)]; }
  int size(int m) const { return size_[static_cast<std::size_t>(m)]; }
  double total_exit() const { return sum_exit_; }

  double codelength() const { return plogp(sum_exit_) - 2.0 * sum_plogp_exit_ - node_term_ + sum_plogp_usage_; }

  /// Flow from v into module m and from m into v, excluding v itself.
  std::pair<double, double> flows_with(int v, int m) const {
    double out = 0.0, in = 0.0;
    for (const auto& a : g_->out[static_cast<std::size_t>(v)]) {
      if (module_of_[static_cast<std::size_t>(a.node)] == m) out += a.flow;
    }
    for (const auto& a : g_->in[static_cast<std::size_t>(v)]) {
      if (module_of_[static_cast<std::size_t>(a.node)] == m) in += a.flow;
    }
    return {out, in};
  }

  double delta(int v, int target) const {
    const int from = module_of(v);
    if (from == target) return 0.0;
    auto [out_old, in_old] = flows_with(v, from);
    auto [out_new, in_new] = flows_with(v, target);
    return delta(v, target, out_old, in_old, out_new, in_new);
  }

  /// Codelength change of moving v to `target` given v's flow exchange with
  /// its current module (out_old, in_old) and with the target (out_new, in_new).
  double delta(int v, int target, double out_old, double in_old, double out_new, double in_new) const {
    const int from = module_of(v);
    if (from == target) return 0.0;
    const auto next = after_move(v, target, out_old, in_old, out_new, in_new);
    const double exit_a = exit(from), exit_b = exit(target);
    const double usage_a = exit_a + flow(from), usage_b = exit_b + flow(target);
    return (plogp(next.sum_exit) - plogp(sum_exit_)) -
           2.0 * (plogp(next.exit_a) + plogp(next.exit_b) - plogp(exit_a) - plogp(exit_b)) +
           (plogp(next.exit_a + next.flow_a) + plogp(next.exit_b + next.flow_b) - plogp(usage_a) - plogp(usage_b));
  }

  void move(int v, int target) {
    const int from = module_of(v);
    if (from == target) return;
    auto [out_old, in_old] = flows_with(v, from);
    auto [out_new, in_new] = flows_with(v, target);
    move(v, target, out_old, in_old, out_new, in_new);
  }

  void move(int v, int target, double out_old, double in_old, double out_new, double in_new) {
    const int from = module_of(v);
    if (from == target) return;
    const auto next = after_move(v, target, out_old, in_old, out_new, in_new);
    const auto a = static_cast<std::size_t>(from), b = static_cast<std::size_t>(target);
    sum_plogp_exit_ += plogp(next.exit_a) + plogp(next.exit_b) - plogp(exit_[a]) - plogp(exit_[b]);
    sum_plogp_usage_ += plogp(next.exit_a + next.flow_a) + plogp(next.exit_b + next.flow_b) -
                        plogp(exit_[a] + flow_[a]) - plogp(exit_[b] + flow_[b]);
    exit_[a] = next.exit_a;
    exit_[b] = next.exit_b;
    flow_[a] = next.flow_a;
    flow_[b] = next.flow_b;
    sum_exit_ = next.sum_exit;
    --size_[a];
    ++size_[b];
    module_of_[static_cast<std::size_t>(v)] = target;
    if (size_[a] == 0) {
      exit_[a] = 0.0;
      flow_[a] = 0.0;
    }
  }

  /// Moves every node of slot `from` into the empty slot `to`.
  void rename(int from, int to) {
    const auto f = static_cast<std::size_t>(from), t = static_cast<std::size_t>(to);
    if (size_[t] != 0) throw Error("rename into non-empty module");
    std::swap(exit_[f], exit_[t]);
    std::swap(flow_[f], flow_[t]);
    std::swap(size_[f], size_[t]);
    for (auto& m : module_of_) {
      if (m == from) m = to;
    }
  }

  void recompute_sums() {
    sum_exit_ = sum_plogp_exit_ = sum_plogp_usage_ = 0.0;
    for (std::size_t m = 0; m < exit_.size(); ++m) {
      sum_exit_ += exit_[m];
      sum_plogp_exit_ += plogp(exit_[m]);
      sum_plogp_usage_ += plogp(exit_[m] + flow_[m]);
    }
  }

 private:
  struct After {
    double exit_a, exit_b, flow_a, flow_b, sum_exit;
  };

  After after_move(int v, int target, double out_old, double in_old, double out_new, double in_new) const {
    const int from = module_of(v);
    const double out_v = g_->out_total[static_cast<std::size_t>(v)];
    const double p = g_->visit[static_cast<std::size_t>(v)];
    After r;
    if (size(from) == 1) {
      r.exit_a = 0.0;
      r.flow_a = 0.0;
    } else {
      r.exit_a = exit(from) - (out_v - out_old) + in_old;
      r.flow_a = flow(from) - p;
    }
    r.exit_b = exit(target) + (out_v - out_new) - in_new;
    r.flow_b = flow(target) + p;
    r.sum_exit = sum_exit_ - exit(from) - exit(target) + r.exit_a + r.exit_b;
    return r;
  }

  const FlowGraph* g_ = nullptr;
  std::vector<int> module_of_;
  std::vector<double> exit_, flow_;
  std::vector<int> size_;
  double node_term_ = 0.0;
  double sum_exit_ = 0.0, sum_plogp_exit_ = 0.0, sum_plogp_usage_ = 0.0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Partitions and the codelength

inline constexpr int kNoModule = -1;

/// Assignment of the active flow nodes to modules 0..m-1 (contiguous, none
/// empty), with incrementally maintained module statistics. Inactive nodes
/// carry kNoModule. Holds a pointer to its FlowSystem, which must outlive it.
class Partition {
 public:
  /// Labels may be any non-negative integers; they are compacted in
  /// ascending label order.
  Partition(const FlowSystem& fs, std::span<const int> labels) : fs_(&fs) {
    if (static_cast<int>(labels.size()) != fs.n_flow()) throw Error("partition: assignment size mismatch");
    std::vector<int> distinct;
    for (int v = 0; v < fs.n_flow(); ++v) {
      const int l = labels[static_cast<std::size_t>(v)];
      if (!fs.active[static_cast<std::size_t>(v)]) {
        if (l != kNoModule) throw Error("partition: inactive node " + std::to_string(v) + " assigned to a module");
        continue;
      }
      if (l < 0) throw Error("partition: active node " + std::to_string(v) + " assigned to no module");
      distinct.push_back(l);
    }
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<int> module_of(labels.size(), kNoModule);
    for (std::size_t v = 0; v < labels.size(); ++v) {
      if (labels[v] >= 0) {
        module_of[v] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), labels[v]) - distinct.begin());
      }
    }
    m_ = static_cast<int>(distinct.size());
    state_ = detail::ModuleState(fs.graph, std::move(module_of), fs.n_flow(), fs.node_term);
  }

  static Partition one_module(const FlowSystem& fs) {
    std::vector<int> l(static_cast<std::size_t>(fs.n_flow()), kNoModule);
    for (int v = 0; v < fs.n_flow(); ++v) {
      if (fs.active[static_cast<std::size_t>(v)]) l[static_cast<std::size_t>(v)] = 0;
    }
    return Partition(fs, l);
  }

  static Partition singletons(const FlowSystem& fs) {
    std::vector<int> l(static_cast<std::size_t>(fs.n_flow()), kNoModule);
    for (int v = 0; v < fs.n_flow(); ++v) {
      if (fs.active[static_cast<std::size_t>(v)]) l[static_cast<std::size_t>(v)] = v;
    }
    return Partition(fs, l);
  }

  const FlowSystem& flow_system() const { return *fs_; }
  int module_count() const { return m_; }
  int module_of(int node) const { return state_.module_of(node); }
  const std::vector<int>& assignment() const { return state_.assignment(); }
  double exit_flow(int module) const { return state_.exit(module); }
  double internal_visit(int module) const { return state_.flow(module); }
  double usage(int module) const { return state_.exit(module) + state_.flow(module); }
  double total_exit() const { return state_.total_exit(); }
  int size(int module) const { return state_.size(module); }

  std::vector<int> members(int module) const {
    std::vector<int> out;
    for (int v = 0; v < fs_->n_flow(); ++v) {
      if (module_of(v) == module) out.push_back(v);
    }
    return out;
  }

  /// Codelength from the running sums.
  double cached_codelength() const { return state_.codelength(); }

  /// L(after) - L(before) for moving `node` to `target`; target ==
  /// module_count() means a fresh singleton module.
  double delta(int node, int target) const {
    check_move(node, target);
    return state_.delta(node, target);
  }

  /// Applies the move; an emptied module takes over the highest id so ids
  /// stay contiguous.
  void move(int node, int target) {
    check_move(node, target);
    const int from = module_of(node);
    if (from == target) return;
    state_.move(node, target);
    if (target == m_) ++m_;
    if (state_.size(from) == 0) {
      if (from != m_ - 1) state_.rename(m_ - 1, from);
      --m_;
    }
  }

 private:
  void check_move(int node, int target) const {
    if (node < 0 || node >= fs_->n_flow() || !fs_->active[static_cast<std::size_t>(node)]) {
      throw Error("partition: node is not active");
    }
    if (target < 0 || target > m_) throw Error("partition: no such module");
  }

  const FlowSystem* fs_;
  int m_ = 0;
  detail::ModuleState state_;
};

struct ModuleFlowStats {
  std::vector<double> exit;      ///< q_alpha, flow leaving each module per step
  std::vector<double> internal;  ///< summed visit rate of the members
  std::vector<double> usage;     ///< exit + internal
  double total_exit = 0.0;
};

/// Recomputes module statistics from scratch from a raw assignment
/// (module ids 0..m-1 over active nodes, kNoModule elsewhere).
inline ModuleFlowStats module_flow_stats(const FlowSystem& fs, std::span<const int> assignment) {
  if (static_cast<int>(assignment.size()) != fs.n_flow()) throw Error("module stats: assignment size mismatch");
  int m = 0;
  for (int v = 0; v < fs.n_flow(); ++v) {
    const int a = assignment[static_cast<std::size_t>(v)];
    if (fs.active[static_cast<std::size_t>(v)] && a < 0) {
      throw Error("module stats: node " + std::to_string(v) + " assigned to no module");
    }
    m = std::max(m, a + 1);
  }
  ModuleFlowStats s;
  s.exit.assign(static_cast<std::size_t>(m), 0.0);
  s.internal.assign(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < fs.n_flow(); ++i) {
    const int a = assignment[static_cast<std::size_t>(i)];
    if (a < 0) continue;
    s.internal[static_cast<std::size_t>(a)] += fs.visit[static_cast<std::size_t>(i)];
    for (auto [j, prob] : fs.transition[static_cast<std::size_t>(i)]) {
      if (assignment[static_cast<std::size_t>(j)] != a) s.exit[static_cast<std::size_t>(a)] += prob * fs.visit[static_cast<std::size_t>(i)];
    }
  }
  s.usage.resize(s.exit.size());
  for (std::size_t k = 0; k < s.exit.size(); ++k) {
    s.usage[k] = s.exit[k] + s.internal[k];
    s.total_exit += s.exit[k];
  }
  return s;
}

inline ModuleFlowStats module_flow_stats(const Partition& p) {
  return module_flow_stats(p.flow_system(), p.assignment());
}

struct CodelengthReport {
  double total = 0.0;
  double index_term = 0.0;
  std::vector<double> module_terms;
};

/// Two-level codelength in bits, evaluated from scratch.
inline CodelengthReport codelength(const FlowSystem& fs, std::span<const int> assignment) {
  const auto s = module_flow_stats(fs, assignment);
  CodelengthReport r;
  if (s.total_exit > 0.0) {
    double h_index = 0.0;
    for (double q : s.exit) {
      if (q > 0.0) h_index -= (q / s.total_exit) * std::log2(q / s.total_exit);
    }
    r.index_term = s.total_exit * h_index;
  }
  r.module_terms.assign(s.exit.size(), 0.0);
  for (int i = 0; i < fs.n_flow(); ++i) {
    const int a = assignment[static_cast<std::size_t>(i)];
    const double p = fs.visit[static_cast<std::size_t>(i)];
    if (a < 0 || p <= 0.0) continue;
    const double u = s.usage[static_cast<std::size_t>(a)];
    r.module_terms[static_cast<std::size_t>(a)] -= u * (p / u) * std::log2(p / u);
  }
  for (std::size_t k = 0; k < s.exit.size(); ++k) {
    const double q = s.exit[k], u = s.usage[k];
    if (q > 0.0) r.module_terms[k] -= u * (q / u) * std::log2(q / u);
  }
  r.total = r.index_term;
  for (double t : r.module_terms) r.total += t;
  return r;
}

inline CodelengthReport codelength(const Partition& p) { return codelength(p.flow_system(), p.assignment()); }

/// Incremental codelength change; see Partition::delta.
inline double delta_codelength(const Partition& p, int node, int target) { return p.delta(node, target); }

}  // namespace entromap
