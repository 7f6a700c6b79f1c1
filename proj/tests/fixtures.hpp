#pragma once

// Graph and data generators shared by the unit tests and the acceptance run.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "entromap/flow.hpp"
#include "entromap/lasso.hpp"

namespace fixture {

using entromap::DirectedAdjacency;

inline DirectedAdjacency from_edges(int n, std::initializer_list<std::pair<int, int>> edges) {
  DirectedAdjacency a;
  a.n = n;
  for (auto [i, j] : edges) a.add(i, j);
  return a;
}

/// Directed cliques of the given sizes on consecutive stocks.
inline DirectedAdjacency cliques(const std::vector<int>& sizes) {
  DirectedAdjacency a;
  for (int s : sizes) a.n += s;
  int base = 0;
  for (int s : sizes) {
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j)
        if (i != j) a.add(base + i, base + j);
    base += s;
  }
  return a;
}

/// Two directed 3-cliques joined by one reciprocal pair of links.
inline DirectedAdjacency bridged_triangles() {
  auto a = cliques({3, 3});
  a.add(2, 3);
  a.add(3, 2);
  return a;
}

/// Random digraph with at least one link.
inline DirectedAdjacency random_nonempty(int n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  std::uniform_int_distribution<int> pick(0, n - 1);
  DirectedAdjacency a;
  a.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && coin(rng)) a.add(i, j);
  while (a.edge_count() == 0) {
    const int i = pick(rng), j = pick(rng);
    if (i != j) a.add(i, j);
  }
  return a;
}

/// Directed stochastic block model; `truth` receives the block of each node.
inline DirectedAdjacency sbm(int n, int blocks, double p_in, double p_out, std::mt19937_64& rng, std::vector<int>& truth) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  truth.assign(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) truth[static_cast<std::size_t>(i)] = i * blocks / n;
  DirectedAdjacency a;
  a.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool same = truth[static_cast<std::size_t>(i)] == truth[static_cast<std::size_t>(j)];
      if (u(rng) < (same ? p_in : p_out)) a.add(i, j);
    }
  return a;
}

inline std::vector<int> active_nodes(const entromap::FlowSystem& fs) {
  std::vector<int> out;
  for (int v = 0; v < fs.n_flow(); ++v)
    if (fs.active[static_cast<std::size_t>(v)]) out.push_back(v);
  return out;
}

/// Uniformly random labels in [0, k) on the active nodes.
inline std::vector<int> random_labels(const entromap::FlowSystem& fs, int k, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::vector<int> l(static_cast<std::size_t>(fs.n_flow()), entromap::kNoModule);
  for (int v : active_nodes(fs)) l[static_cast<std::size_t>(v)] = pick(rng);
  return l;
}

/// Returns panel where column `dst` follows 0.8 * column `src` plus noise
/// and every other column is independent noise, all with scale sigma.
inline Eigen::MatrixXd var_panel(int T, int n, int src, int dst, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, sigma);
  Eigen::MatrixXd R(T, n);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < n; ++j) R(t, j) = z(rng);
  for (int t = 0; t < T; ++t) R(t, dst) = 0.8 * R(t, src) + z(rng);
  return R;
}

}  // namespace fixture
