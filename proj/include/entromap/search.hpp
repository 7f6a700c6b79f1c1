#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "entromap/common.hpp"
#include "entromap/flow.hpp"

namespace entromap {

struct SearchConfig {
  std::uint64_t seed = 42;
  int n_restarts = 10;
  int max_outer_passes = 100;
  double min_gain_bits = 1e-10;
};

struct SearchResult {
  Partition best;
  CodelengthReport report;
  /// Codelength after every pass of the winning restart, starting with singletons.
  std::vector<double> trace;
  int restart_index = 0;
};

namespace detail {

inline constexpr int kMaxSweeps = 10000;

/// Greedy local moves: visit nodes in random order and move each to the
/// neighbouring module with the largest codelength decrease beyond
/// min_gain (smallest module id on ties). Stops after a sweep without
/// moves. Returns whether anything moved.
inline bool local_moves(const FlowGraph& g, ModuleState& state, Rng& rng, double min_gain) {
  std::vector<int> order;
  for (int v = 0; v < g.size(); ++v) {
    if (state.module_of(v) >= 0) order.push_back(v);
  }
  std::vector<double> out_to(static_cast<std::size_t>(state.slots()), 0.0);
  std::vector<double> in_from(static_cast<std::size_t>(state.slots()), 0.0);
  std::vector<int> touched;
  std::vector<char> is_touched(static_cast<std::size_t>(state.slots()), 0);

  bool any = false;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    shuffle(order, rng);
    bool moved = false;
    for (int v : order) {
      const int from = state.module_of(v);
      auto touch = [&](int m) {
        if (!is_touched[static_cast<std::size_t>(m)]) {
          is_touched[static_cast<std::size_t>(m)] = 1;
          touched.push_back(m);
        }
      };
      touch(from);
      for (const auto& a : g.out[static_cast<std::size_t>(v)]) {
        const int m = state.module_of(a.node);
        touch(m);
        out_to[static_cast<std::size_t>(m)] += a.flow;
      }
      for (const auto& a : g.in[static_cast<std::size_t>(v)]) {
        const int m = state.module_of(a.node);
        touch(m);
        in_from[static_cast<std::size_t>(m)] += a.flow;
      }
      std::sort(touched.begin(), touched.end());

      const double out_old = out_to[static_cast<std::size_t>(from)], in_old = in_from[static_cast<std::size_t>(from)];
      int best = from;
      double best_delta = -min_gain;
      for (int m : touched) {
        if (m == from) continue;
        const double d = state.delta(v, m, out_old, in_old, out_to[static_cast<std::size_t>(m)], in_from[static_cast<std::size_t>(m)]);
        if (d < best_delta) {
          best_delta = d;
          best = m;
        }
      }
      if (best != from) {
        state.move(v, best, out_old, in_old, out_to[static_cast<std::size_t>(best)], in_from[static_cast<std::size_t>(best)]);
        moved = true;
      }
      for (int m : touched) {
        out_to[static_cast<std::size_t>(m)] = 0.0;
        in_from[static_cast<std::size_t>(m)] = 0.0;
        is_touched[static_cast<std::size_t>(m)] = 0;
      }
      touched.clear();
    }
    if (!moved) break;
    any = true;
  }
  return any;
}

/// Relabels modules 0..k-1 by order of their lowest-numbered node.
inline std::pair<std::vector<int>, int> compact(const std::vector<int>& module_of) {
  std::vector<int> remap;
  std::vector<int> out(module_of.size(), kNoModule);
  int k = 0;
  for (std::size_t v = 0; v < module_of.size(); ++v) {
    const int m = module_of[v];
    if (m < 0) continue;
    if (static_cast<std::size_t>(m) >= remap.size()) remap.resize(static_cast<std::size_t>(m) + 1, -1);
    if (remap[static_cast<std::size_t>(m)] < 0) remap[static_cast<std::size_t>(m)] = k++;
    out[v] = remap[static_cast<std::size_t>(m)];
  }
  return {out, k};
}

/// Collapses each module (labels 0..k-1) into one node carrying its visit
/// rate and its flow to and from other modules.
inline FlowGraph contract(const FlowGraph& g, const std::vector<int>& labels, int k) {
  FlowGraph s;
  s.visit.assign(static_cast<std::size_t>(k), 0.0);
  s.out.assign(static_cast<std::size_t>(k), {});
  std::vector<std::vector<int>> members(static_cast<std::size_t>(k));
  for (int v = 0; v < g.size(); ++v) {
    const int m = labels[static_cast<std::size_t>(v)];
    if (m < 0) continue;
    s.visit[static_cast<std::size_t>(m)] += g.visit[static_cast<std::size_t>(v)];
    members[static_cast<std::size_t>(m)].push_back(v);
  }
  std::vector<double> acc(static_cast<std::size_t>(k), 0.0);
  std::vector<int> touched;
  for (int a = 0; a < k; ++a) {
    for (int v : members[static_cast<std::size_t>(a)]) {
      for (const auto& arc : g.out[static_cast<std::size_t>(v)]) {
        const int b = labels[static_cast<std::size_t>(arc.node)];
        if (b == a) continue;
        if (acc[static_cast<std::size_t>(b)] == 0.0) touched.push_back(b);
        acc[static_cast<std::size_t>(b)] += arc.flow;
      }
    }
    std::sort(touched.begin(), touched.end());
    for (int b : touched) {
      s.out[static_cast<std::size_t>(a)].push_back({b, acc[static_cast<std::size_t>(b)]});
      acc[static_cast<std::size_t>(b)] = 0.0;
    }
    touched.clear();
  }
  s.finalize();
  return s;
}

struct RestartOutcome {
  std::vector<int> labels;
  double codelength;
  std::vector<double> trace;
};

inline RestartOutcome run_restart(const FlowSystem& fs, const SearchConfig& cfg, Rng rng) {
  const FlowGraph& g = fs.graph;
  std::vector<int> start(static_cast<std::size_t>(g.size()), kNoModule);
  for (int v = 0; v < g.size(); ++v) {
    if (fs.active[static_cast<std::size_t>(v)]) start[static_cast<std::size_t>(v)] = v;
  }
  ModuleState state(g, start, g.size(), fs.node_term);
  RestartOutcome r;
  r.trace.push_back(state.codelength());

  for (int pass = 0; pass < cfg.max_outer_passes; ++pass) {
    bool improved = false;
    if (local_moves(g, state, rng, cfg.min_gain_bits)) {
      improved = true;
      r.trace.push_back(state.codelength());
    }
    // Aggregate modules into super-nodes and keep merging them while it pays.
    while (true) {
      auto [labels, k] = compact(state.assignment());
      if (k < 2) break;
      FlowGraph super = contract(g, labels, k);
      auto super_state = ModuleState::singletons(super, fs.node_term);
      if (!local_moves(super, super_state, rng, cfg.min_gain_bits)) break;
      for (auto& l : labels) {
        if (l >= 0) l = super_state.module_of(l);
      }
      state = ModuleState(g, labels, g.size(), fs.node_term);
      improved = true;
      r.trace.push_back(state.codelength());
    }
    if (!improved) break;
  }
  r.labels = compact(state.assignment()).first;
  r.codelength = state.codelength();
  return r;
}

}  // namespace detail

/// Minimizes the two-level codelength: per restart, greedy node moves from
/// singletons, then repeated contraction of modules into super-nodes and
/// moves of those, alternating until neither step helps. The best restart
/// wins (lowest codelength, then lowest restart index). Deterministic for a
/// fixed flow system and configuration.
inline SearchResult optimize(const FlowSystem& fs, const SearchConfig& cfg = {}) {
  if (cfg.n_restarts < 1) throw Error("search: n_restarts must be >= 1");
  if (cfg.min_gain_bits < 0.0) throw Error("search: min_gain_bits must be >= 0");
  int winner = -1;
  detail::RestartOutcome best;
  for (int r = 0; r < cfg.n_restarts; ++r) {
    auto outcome = detail::run_restart(fs, cfg, make_rng(cfg.seed, static_cast<std::uint64_t>(r)));
    if (winner < 0 || outcome.codelength < best.codelength) {
      best = std::move(outcome);
      winner = r;
    }
  }
  Partition partition(fs, best.labels);
  auto report = codelength(partition);
  return SearchResult{std::move(partition), std::move(report), std::move(best.trace), winner};
}

}  // namespace entromap
