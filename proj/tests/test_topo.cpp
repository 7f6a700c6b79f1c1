#include <random>

#include <gtest/gtest.h>

#include "entromap/topo.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace entromap;
using topo::Mode;

namespace {

DirectedAdjacency undirected(int n, std::initializer_list<std::pair<int, int>> edges) {
  DirectedAdjacency a;
  a.n = n;
  for (auto [i, j] : edges) {
    a.add(i, j);
    a.add(j, i);
  }
  return a;
}

DirectedAdjacency star(int n) {
  DirectedAdjacency a;
  a.n = n;
  for (int i = 1; i < n; ++i) {
    a.add(0, i);
    a.add(i, 0);
  }
  return a;
}

DirectedAdjacency cycle(int n) {
  DirectedAdjacency a;
  a.n = n;
  for (int i = 0; i < n; ++i) {
    a.add(i, (i + 1) % n);
    a.add((i + 1) % n, i);
  }
  return a;
}

}  // namespace

TEST(ShortestPaths, CompleteAndPath) {
  auto k4 = fixture::cliques({4});
  auto s = topo::shortest_path_stats(k4, Mode::undirected);
  EXPECT_EQ(s.avg_shortest_path, 1.0);
  EXPECT_EQ(s.diameter, 1);
  auto path = undirected(3, {{0, 1}, {1, 2}});
  auto p = topo::shortest_path_stats(path, Mode::undirected);
  EXPECT_DOUBLE_EQ(p.avg_shortest_path, 4.0 / 3.0);
  EXPECT_EQ(p.diameter, 2);
  EXPECT_EQ(p.distance[0][2], 2);
}

TEST(ShortestPaths, DirectedUnreachablePairsExcluded) {
  auto a = fixture::from_edges(3, {{0, 1}, {1, 2}});
  auto s = topo::shortest_path_stats(a, Mode::directed);
  EXPECT_EQ(s.reachable_pairs, 3);
  EXPECT_DOUBLE_EQ(s.avg_shortest_path, 4.0 / 3.0);
  EXPECT_EQ(s.distance[2][0], topo::kUnreachable);
}

TEST(ShortestPaths, MatchFloydWarshall) {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    auto adj = oracle::random_digraph(5 + rep * 2, 0.08, rng);
    for (Mode m : {Mode::directed, Mode::undirected}) {
      auto s = topo::shortest_path_stats(adj, m);
      auto d = oracle::floyd_warshall(adj, m == Mode::undirected);
      for (int i = 0; i < adj.n; ++i)
        for (int j = 0; j < adj.n; ++j) {
          const int want = d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
          EXPECT_EQ(s.distance[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], want >= oracle::kInf ? topo::kUnreachable : want);
        }
    }
  }
}

TEST(Clustering, TriangleStarAndOracle) {
  auto tri = undirected(3, {{0, 1}, {1, 2}, {0, 2}});
  for (double c : topo::clustering_coefficient(tri).per_node) EXPECT_EQ(c, 1.0);
  for (double c : topo::clustering_coefficient(star(4)).per_node) EXPECT_EQ(c, 0.0);
  std::mt19937_64 rng(32);
  for (int rep = 0; rep < 20; ++rep) {
    auto adj = oracle::random_digraph(10 + rep, 0.2, rng);
    EXPECT_EQ(topo::clustering_coefficient(adj).per_node, oracle::clustering_by_triples(adj));
  }
}

TEST(Density, Examples) {
  EXPECT_EQ(topo::density(fixture::cliques({5})), 1.0);
  DirectedAdjacency empty;
  empty.n = 4;
  EXPECT_EQ(topo::density(empty), 0.0);
  EXPECT_DOUBLE_EQ(topo::density(fixture::from_edges(3, {{0, 2}})), 1.0 / 6.0);
}

TEST(Centralities, StarCentre) {
  auto c = topo::centralities(star(5), Mode::undirected);
  EXPECT_DOUBLE_EQ(c.degree[0], 1.0);
  EXPECT_DOUBLE_EQ(c.betweenness[0], 1.0);
  EXPECT_DOUBLE_EQ(c.closeness[0], 1.0);
  EXPECT_DOUBLE_EQ(c.degree[1], 0.25);
  EXPECT_EQ(c.betweenness[1], 0.0);
}

TEST(Centralities, PathMiddleIsSoleBroker) {
  auto c = topo::centralities(undirected(3, {{0, 1}, {1, 2}}), Mode::undirected);
  EXPECT_DOUBLE_EQ(c.betweenness[1], 1.0);
  EXPECT_EQ(c.betweenness[0], 0.0);
}

TEST(Centralities, BrandesMatchesGeodesicEnumeration) {
  std::mt19937_64 rng(33);
  for (int rep = 0; rep < 20; ++rep) {
    auto adj = oracle::random_digraph(6 + rep, 0.15, rng);
    auto got = topo::betweenness(adj);
    auto want = oracle::betweenness_by_geodesics(adj);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-10);
  }
}

TEST(Centralities, DirectedClosenessUsesLinkDirection) {
  // 0 -> 1 -> 2: node 0 reaches two nodes, nobody reaches it.
  auto c = topo::centralities(fixture::from_edges(3, {{0, 1}, {1, 2}}), Mode::directed);
  EXPECT_DOUBLE_EQ(c.out_closeness[0], 4.0 / (2.0 * 3.0));
  EXPECT_EQ(c.in_closeness[0], 0.0);
  EXPECT_DOUBLE_EQ(c.in_closeness[2], 4.0 / (2.0 * 3.0));
  EXPECT_DOUBLE_EQ(c.out_degree[0], 0.5);
  EXPECT_EQ(c.in_degree[0], 0.0);
  EXPECT_DOUBLE_EQ(c.degree[1], 0.5);
}

TEST(Centralisations, ExtremalIdentities) {
  for (int n = 4; n <= 20; ++n) {
    auto s = topo::centralisations(topo::centralities(star(n), Mode::undirected), Mode::undirected);
    EXPECT_NEAR(s.degree, 1.0, 1e-12) << n;
    auto cyc = topo::centralisations(topo::centralities(cycle(n), Mode::undirected), Mode::undirected);
    EXPECT_NEAR(cyc.degree, 0.0, 1e-12) << n;
    EXPECT_NEAR(cyc.betweenness, 0.0, 1e-12) << n;
    auto full = topo::centralisations(topo::centralities(fixture::cliques({n}), Mode::directed), Mode::directed);
    EXPECT_NEAR(full.out_degree, 0.0, 1e-12);
    EXPECT_NEAR(full.in_closeness, 0.0, 1e-12);
  }
}

TEST(Centralisations, DirectedOutStarSaturates) {
  for (int n = 4; n <= 12; ++n) {
    DirectedAdjacency a;
    a.n = n;
    for (int i = 1; i < n; ++i) a.add(0, i);
    auto z = topo::centralisations(topo::centralities(a, Mode::directed), Mode::directed);
    EXPECT_NEAR(z.out_degree, 1.0, 1e-12);
    EXPECT_LE(z.in_degree, 1.0);
  }
}

TEST(Indicators, InvariantUnderRelabeling) {
  std::mt19937_64 rng(34);
  for (int rep = 0; rep < 10; ++rep) {
    auto adj = oracle::random_digraph(12, 0.2, rng);
    std::vector<int> perm(12);
    for (int k = 0; k < 12; ++k) perm[static_cast<std::size_t>(k)] = k;
    std::shuffle(perm.begin(), perm.end(), rng);
    DirectedAdjacency b;
    b.n = 12;
    for (auto [i, j] : adj.entries) b.add(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    auto va = topo::values(topo::indicators(adj)), vb = topo::values(topo::indicators(b));
    for (std::size_t k = 0; k < va.size(); ++k) EXPECT_NEAR(va[k], vb[k], 1e-12) << topo::kIndicatorLabels[k];
  }
}

TEST(Indicators, SymmetricGraphsAgreeAcrossModes) {
  std::mt19937_64 rng(35);
  auto d = oracle::random_digraph(15, 0.15, rng);
  DirectedAdjacency sym;
  sym.n = d.n;
  for (auto [i, j] : d.entries) {
    sym.add(i, j);
    sym.add(j, i);
  }
  auto a = topo::shortest_path_stats(sym, Mode::directed);
  auto b = topo::shortest_path_stats(sym, Mode::undirected);
  EXPECT_EQ(a.distance, b.distance);
  auto cd = topo::centralities(sym, Mode::directed);
  auto cu = topo::centralities(sym, Mode::undirected);
  for (int i = 0; i < sym.n; ++i) {
    EXPECT_NEAR(cd.degree[static_cast<std::size_t>(i)], cu.degree[static_cast<std::size_t>(i)], 1e-15);
    EXPECT_NEAR(cd.closeness[static_cast<std::size_t>(i)], cu.closeness[static_cast<std::size_t>(i)], 1e-15);
  }
}

TEST(Indicators, RequireThreeNodes) {
  EXPECT_THROW(topo::indicators(fixture::from_edges(2, {{0, 1}})), Error);
  EXPECT_THROW(topo::density(DirectedAdjacency{}), Error);
}
