#pragma once

#include <algorithm>
#include <array>
#include <deque>
#include <string>
#include <vector>

#include "entromap/common.hpp"
#include "entromap/lasso.hpp"

namespace entromap::topo {

enum class Mode { directed, undirected };

inline constexpr int kUnreachable = -1;

/// Neighbour lists of a DirectedAdjacency and of its undirected
/// simplification (i ~ j iff i -> j or j -> i).
struct Neighbours {
  std::vector<std::vector<int>> out, in, both;

  explicit Neighbours(const DirectedAdjacency& adj)
      : out(static_cast<std::size_t>(adj.n)), in(static_cast<std::size_t>(adj.n)), both(static_cast<std::size_t>(adj.n)) {
    for (auto [i, j] : adj.entries) {
      out[static_cast<std::size_t>(i)].push_back(j);
      in[static_cast<std::size_t>(j)].push_back(i);
      both[static_cast<std::size_t>(i)].push_back(j);
      both[static_cast<std::size_t>(j)].push_back(i);
    }
    for (auto& l : both) {
      std::sort(l.begin(), l.end());
      l.erase(std::unique(l.begin(), l.end()), l.end());
    }
  }

  const std::vector<std::vector<int>>& forward(Mode m) const { return m == Mode::directed ? out : both; }
};

struct PathStats {
  double avg_shortest_path = 0.0;  ///< mean over reachable ordered pairs
  int diameter = 0;                ///< longest finite distance
  long long reachable_pairs = 0;
  /// distance[i][j] in hops from i to j, kUnreachable if none.
  std::vector<std::vector<int>> distance;
};

inline std::vector<int> bfs(const std::vector<std::vector<int>>& nbrs, int source) {
  std::vector<int> dist(nbrs.size(), kUnreachable);
  std::deque<int> queue{source};
  dist[static_cast<std::size_t>(source)] = 0;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w : nbrs[static_cast<std::size_t>(v)]) {
      if (dist[static_cast<std::size_t>(w)] == kUnreachable) {
        dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

/// Unweighted all-pairs distances by BFS. Unreachable pairs count toward
/// neither the average nor the diameter.
inline PathStats shortest_path_stats(const DirectedAdjacency& adj, Mode mode) {
  if (adj.n < 1) throw Error("shortest paths: empty graph");
  Neighbours nb(adj);
  PathStats s;
  long long total = 0;
  for (int i = 0; i < adj.n; ++i) {
    auto d = bfs(nb.forward(mode), i);
    for (int j = 0; j < adj.n; ++j) {
      const int dij = d[static_cast<std::size_t>(j)];
      if (j == i || dij == kUnreachable) continue;
      total += dij;
      ++s.reachable_pairs;
      s.diameter = std::max(s.diameter, dij);
    }
    s.distance.push_back(std::move(d));
  }
  if (s.reachable_pairs > 0) s.avg_shortest_path = static_cast<double>(total) / static_cast<double>(s.reachable_pairs);
  return s;
}

struct Clustering {
  std::vector<double> per_node;
  double mean = 0.0;
};

/// Local clustering 2 n_i / (k_i (k_i - 1)) on the undirected
/// simplification; nodes of degree < 2 score 0.
inline Clustering clustering_coefficient(const DirectedAdjacency& adj) {
  Neighbours nb(adj);
  Clustering c;
  c.per_node.assign(static_cast<std::size_t>(adj.n), 0.0);
  std::vector<char> mark(static_cast<std::size_t>(adj.n), 0);
  for (int i = 0; i < adj.n; ++i) {
    const auto& ni = nb.both[static_cast<std::size_t>(i)];
    const auto k = static_cast<long long>(ni.size());
    if (k < 2) continue;
    for (int j : ni) mark[static_cast<std::size_t>(j)] = 1;
    long long links = 0;
    for (int j : ni) {
      for (int w : nb.both[static_cast<std::size_t>(j)]) {
        if (mark[static_cast<std::size_t>(w)]) ++links;
      }
    }
    for (int j : ni) mark[static_cast<std::size_t>(j)] = 0;
    // Each neighbour-neighbour edge was seen from both ends.
    c.per_node[static_cast<std::size_t>(i)] = static_cast<double>(links) / static_cast<double>(k * (k - 1));
  }
  for (double v : c.per_node) c.mean += v;
  if (adj.n > 0) c.mean /= adj.n;
  return c;
}

inline double density(const DirectedAdjacency& adj) {
  if (adj.n < 2) throw Error("density: at least two nodes required");
  return static_cast<double>(adj.edge_count()) / (static_cast<double>(adj.n) * (adj.n - 1));
}

/// Per-node relative centralities. In directed mode `degree` and `closeness`
/// are the means of the in and out variants; in undirected mode all three
/// variants coincide. Betweenness always uses the undirected simplification.
struct Centralities {
  std::vector<double> out_degree, in_degree, degree;
  std::vector<double> betweenness;
  std::vector<double> out_closeness, in_closeness, closeness;
};

/// Brandes accumulation on the undirected simplification, normalized by
/// 2 / ((N-1)(N-2)) over unordered pairs.
inline std::vector<double> betweenness(const DirectedAdjacency& adj) {
  const int n = adj.n;
  if (n < 3) throw Error("betweenness: at least three nodes required");
  Neighbours nb(adj);
  std::vector<double> cb(static_cast<std::size_t>(n), 0.0);
  std::vector<double> sigma(static_cast<std::size_t>(n)), delta(static_cast<std::size_t>(n));
  std::vector<int> dist(static_cast<std::size_t>(n));
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), kUnreachable);
    stack.clear();
    sigma[static_cast<std::size_t>(s)] = 1.0;
    dist[static_cast<std::size_t>(s)] = 0;
    std::deque<int> queue{s};
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      stack.push_back(v);
      for (int w : nb.both[static_cast<std::size_t>(v)]) {
        if (dist[static_cast<std::size_t>(w)] == kUnreachable) {
          dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
          queue.push_back(w);
        }
        if (dist[static_cast<std::size_t>(w)] == dist[static_cast<std::size_t>(v)] + 1) {
          sigma[static_cast<std::size_t>(w)] += sigma[static_cast<std::size_t>(v)];
        }
      }
    }
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
      const int w = *it;
      for (int v : nb.both[static_cast<std::size_t>(w)]) {
        if (dist[static_cast<std::size_t>(v)] == dist[static_cast<std::size_t>(w)] - 1) {
          delta[static_cast<std::size_t>(v)] +=
              sigma[static_cast<std::size_t>(v)] / sigma[static_cast<std::size_t>(w)] * (1.0 + delta[static_cast<std::size_t>(w)]);
        }
      }
      if (w != s) cb[static_cast<std::size_t>(w)] += delta[static_cast<std::size_t>(w)];
    }
  }
  // Every unordered pair was accumulated from both endpoints.
  const double norm = 1.0 / ((n - 1.0) * (n - 2.0));
  for (auto& v : cb) v *= norm;
  return cb;
}

namespace detail {
/// r^2 / ((N-1) * sum of reachable distances); equals (N-1)/sum d on
/// connected graphs.
inline double closeness_of(long long reachable, long long dist_sum, int n) {
  if (reachable == 0 || dist_sum == 0) return 0.0;
  return static_cast<double>(reachable) * static_cast<double>(reachable) / ((n - 1.0) * static_cast<double>(dist_sum));
}
}  // namespace detail

inline Centralities centralities(const DirectedAdjacency& adj, Mode mode) {
  const int n = adj.n;
  if (n < 2) throw Error("centralities: at least two nodes required");
  Neighbours nb(adj);
  const auto paths = shortest_path_stats(adj, mode);
  Centralities c;
  const auto un = static_cast<std::size_t>(n);
  c.out_degree.resize(un);
  c.in_degree.resize(un);
  c.degree.resize(un);
  c.out_closeness.resize(un);
  c.in_closeness.resize(un);
  c.closeness.resize(un);
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (mode == Mode::directed) {
      c.out_degree[ui] = static_cast<double>(nb.out[ui].size()) / (n - 1);
      c.in_degree[ui] = static_cast<double>(nb.in[ui].size()) / (n - 1);
      c.degree[ui] = 0.5 * (c.out_degree[ui] + c.in_degree[ui]);
    } else {
      c.degree[ui] = c.out_degree[ui] = c.in_degree[ui] = static_cast<double>(nb.both[ui].size()) / (n - 1);
    }
    long long r_out = 0, s_out = 0, r_in = 0, s_in = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const int d_from = paths.distance[ui][static_cast<std::size_t>(j)];
      const int d_to = paths.distance[static_cast<std::size_t>(j)][ui];
      if (d_from != kUnreachable) ++r_out, s_out += d_from;
      if (d_to != kUnreachable) ++r_in, s_in += d_to;
    }
    c.out_closeness[ui] = detail::closeness_of(r_out, s_out, n);
    c.in_closeness[ui] = detail::closeness_of(r_in, s_in, n);
    c.closeness[ui] = 0.5 * (c.out_closeness[ui] + c.in_closeness[ui]);
  }
  c.betweenness = n >= 3 ? betweenness(adj) : std::vector<double>(un, 0.0);
  return c;
}

struct Centralisations {
  double degree = 0.0, out_degree = 0.0, in_degree = 0.0;
  double betweenness = 0.0;
  double closeness = 0.0, out_closeness = 0.0, in_closeness = 0.0;
};

namespace detail {
inline double spread(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double top = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += top - x;
  return s;
}
}  // namespace detail

/// Degree: spread / theoretical maximum, N-2 for undirected degree (star)
/// and N-1 for in/out degree (directed star). Betweenness: spread / (N-1).
/// Closeness: 2(N-3) / ((N-1)(N-2)) * spread.
inline Centralisations centralisations(const Centralities& c, Mode mode) {
  const double n = static_cast<double>(c.degree.size());
  if (n < 3) throw Error("centralisations: at least three nodes required");
  Centralisations out;
  const double directed_max = mode == Mode::directed ? n - 1.0 : n - 2.0;
  out.degree = detail::spread(c.degree) / (n - 2.0);
  out.out_degree = detail::spread(c.out_degree) / directed_max;
  out.in_degree = detail::spread(c.in_degree) / directed_max;
  out.betweenness = detail::spread(c.betweenness) / (n - 1.0);
  const double k = 2.0 * (n - 3.0) / ((n - 1.0) * (n - 2.0));
  out.closeness = k * detail::spread(c.closeness);
  out.out_closeness = k * detail::spread(c.out_closeness);
  out.in_closeness = k * detail::spread(c.in_closeness);
  return out;
}

struct IndicatorTable {
  int diameter = 0;
  double density = 0.0;
  double avg_shortest_path = 0.0;
  double clustering = 0.0;
  double mean_rel_degree = 0.0;
  double mean_rel_betweenness = 0.0;
  double mean_rel_closeness = 0.0;
  double out_degree_centralisation = 0.0;
  double in_degree_centralisation = 0.0;
  double betweenness_centralisation = 0.0;
  double out_closeness_centralisation = 0.0;
  double in_closeness_centralisation = 0.0;
};

inline constexpr std::array<const char*, 12> kIndicatorLabels = {
    "Network diameter",
    "Network density",
    "The average shortest path length",
    "Clustering coefficient",
    "Mean of relative degree centrality",
    "Mean of relative betweenness centrality",
    "Mean of relative closeness centrality",
    "Out-degree centralisation",
    "In-degree centralisation",
    "Betweenness centralisation",
    "Out-degree closeness centralisation",
    "In-degree closeness centralisation",
};

namespace detail {
inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}
}  // namespace detail

/// Every indicator of the stage table. Distances follow link direction.
inline IndicatorTable indicators(const DirectedAdjacency& adj) {
  if (adj.n < 3) throw Error("indicators: at least three nodes required");
  IndicatorTable t;
  const auto paths = shortest_path_stats(adj, Mode::directed);
  const auto c = centralities(adj, Mode::directed);
  const auto z = centralisations(c, Mode::directed);
  t.diameter = paths.diameter;
  t.density = density(adj);
  t.avg_shortest_path = paths.avg_shortest_path;
  t.clustering = clustering_coefficient(adj).mean;
  t.mean_rel_degree = detail::mean(c.degree);
  t.mean_rel_betweenness = detail::mean(c.betweenness);
  t.mean_rel_closeness = detail::mean(c.closeness);
  t.out_degree_centralisation = z.out_degree;
  t.in_degree_centralisation = z.in_degree;
  t.betweenness_centralisation = z.betweenness;
  t.out_closeness_centralisation = z.out_closeness;
  t.in_closeness_centralisation = z.in_closeness;
  return t;
}

inline std::array<double, 12> values(const IndicatorTable& t) {
  return {static_cast<double>(t.diameter), t.density, t.avg_shortest_path, t.clustering, t.mean_rel_degree,
          t.mean_rel_betweenness, t.mean_rel_closeness, t.out_degree_centralisation, t.in_degree_centralisation,
          t.betweenness_centralisation, t.out_closeness_centralisation, t.in_closeness_centralisation};
}

}  // namespace entromap::topo
