#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include <icepool/entropy.hpp>

#include "support/oracles.hpp"

using namespace icepool;
using namespace icepool::testing;

namespace {

// Two clusters of `ni` and `nj` nodes joined by the given (source, target)
// pairs, with local indices into each cluster.
Graph two_cluster_graph(int ni, int nj, const std::vector<Edge>& cross, const std::vector<Edge>& intra = {}) {
  std::vector<Edge> edges = intra;
  for (auto [s, t] : cross) edges.emplace_back(s, ni + t);
  Graph g;
  g.n = ni + nj;
  g.adjacency = adjacency_from_edges(g.n, edges);
  g.features = Matrix::Zero(g.n, 1);
  return g;
}

Partition two_cluster_partition(int ni, int nj) {
  std::vector<int> m(ni + nj, 1);
  std::fill(m.begin(), m.begin() + ni, 0);
  return Partition::from_membership(m);
}

}  // namespace

TEST(ConnectionDistribution, WorkedExampleG1) {
  const auto cr = coarsen(g1(), g1_partition());
  const Vector p01 = connection_distribution(cr, 0, 1);
  EXPECT_NEAR(p01(0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p01(1), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(p01(2), 0.0);
  const Vector p10 = connection_distribution(cr, 1, 0);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p10(i), 1.0 / 3.0, 1e-15);
}

TEST(ConnectionDistribution, SingletonClusters) {
  const Graph g = two_cluster_graph(1, 1, {{0, 0}});
  const auto cr = coarsen(g, two_cluster_partition(1, 1));
  const Vector p = connection_distribution(cr, 0, 1);
  ASSERT_EQ(p.size(), 1);
  EXPECT_EQ(p(0), 1.0);
}

TEST(ConnectionDistribution, UnconnectedPairIsUndefined) {
  const Graph g = two_cluster_graph(2, 2, {}, {{0, 1}});
  const auto cr = coarsen(g, two_cluster_partition(2, 2));
  EXPECT_THROW(connection_distribution(cr, 0, 1), UndefinedDistributionError);
  EXPECT_THROW(connection_distribution(cr, 0, 0), UndefinedDistributionError);
}

TEST(ConnectionEntropy, WorkedExampleG1) {
  const Graph g = g1();
  const auto cr = coarsen(g, g1_partition());
  const auto ef = connection_entropy(cr);
  const double h01 = std::log(3.0) - (2.0 / 3.0) * std::log(2.0);
  EXPECT_NEAR(ef.h(0, 1), h01, 1e-12);
  EXPECT_NEAR(ef.h(1, 0), std::log(3.0), 1e-12);
  EXPECT_NEAR(ef.h(0, 1), 0.6365141682948128, 1e-12);
  EXPECT_NEAR(ef.h(1, 0), 1.0986122886681098, 1e-12);
  EXPECT_NE(ef.h(0, 1), ef.h(1, 0));

  const auto ref = brute_coarsen(g, {0, 0, 0, 1, 1, 1}, 2);
  EXPECT_NEAR(ef.h(0, 1), brute_entropy(ref.blocks.at({0, 1})), 1e-12);
  EXPECT_NEAR(ef.h(1, 0), brute_entropy(ref.blocks.at({1, 0})), 1e-12);
}

TEST(ConnectionEntropy, EvenlyDistributedVersusConcentrated) {
  const Graph spread = two_cluster_graph(5, 5, {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}});
  const Graph hub = two_cluster_graph(5, 5, {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}});
  const auto p = two_cluster_partition(5, 5);
  const auto cs = coarsen(spread, p);
  const auto ch = coarsen(hub, p);
  EXPECT_EQ(cs.a_coar(0, 1), 5.0);
  EXPECT_EQ(ch.a_coar(0, 1), 5.0);
  EXPECT_NEAR(connection_entropy(cs).h(0, 1), std::log(5.0), 1e-12);
  EXPECT_NEAR(connection_entropy(ch).h(0, 1), 0.0, 1e-12);
}

TEST(ConnectionEntropy, DiscriminatesConcentrationAtEqualEdgeCount) {
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = rng.uniform_int(2, 8);
    const int ni = rng.uniform_int(m, 10);
    const int nj = rng.uniform_int(m, 10);
    std::vector<int> sources(ni), targets(nj);
    std::iota(sources.begin(), sources.end(), 0);
    std::iota(targets.begin(), targets.end(), 0);
    rng.shuffle(sources);
    rng.shuffle(targets);
    std::vector<Edge> distributed, concentrated;
    for (int e = 0; e < m; ++e) {
      distributed.emplace_back(sources[e], targets[e]);
      concentrated.emplace_back(sources[0], targets[e]);
    }
    std::vector<Edge> intra;
    for (int e = 0; e < ni + nj; ++e) {
      const int u = rng.uniform_int(0, ni - 1), v = rng.uniform_int(0, ni - 1);
      intra.emplace_back(u, v);
    }
    const auto p = two_cluster_partition(ni, nj);
    const auto cd = coarsen(two_cluster_graph(ni, nj, distributed, intra), p);
    const auto cc = coarsen(two_cluster_graph(ni, nj, concentrated, intra), p);
    EXPECT_EQ(cd.a_coar(0, 1), cc.a_coar(0, 1));
    EXPECT_GT(connection_entropy(cd).h(0, 1), connection_entropy(cc).h(0, 1));
  }
}

TEST(ConnectionEntropy, InvariantsOnRandomInputs) {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = rng.uniform_int(1, 20);
    const int k = rng.uniform_int(1, n);
    const Graph g = random_graph(rng, n, rng.uniform(0.05, 0.5));
    const Partition p = Partition::from_membership(random_membership(rng, n, k));
    const auto cr = coarsen(g, p);
    const auto ef = connection_entropy(cr);
    ASSERT_EQ(ef.h.rows(), k);
    EXPECT_EQ(ef.edge_features.depth(), 3u);
    EXPECT_EQ(ef.edge_features.channels[0], cr.a_coar);
    EXPECT_EQ(ef.edge_features.channels[1], ef.h);
    EXPECT_EQ(ef.edge_features.channels[2], Matrix(ef.h.transpose()));
    for (int i = 0; i < k; ++i) {
      EXPECT_EQ(ef.h(i, i), 0.0);
      for (int j = 0; j < k; ++j) {
        EXPECT_GE(ef.h(i, j), 0.0);
        const Matrix* block = cr.block(i, j);
        if (i == j) continue;
        if (block == nullptr) {
          EXPECT_EQ(ef.h(i, j), 0.0);
          EXPECT_EQ(ef.h(j, i), 0.0);
          continue;
        }
        const auto nonzero_rows = (block->rowwise().sum().array() > 0.0).count();
        const double bound = std::log(static_cast<double>(std::min<Eigen::Index>(p.size(i), nonzero_rows)));
        EXPECT_LE(ef.h(i, j), bound + 1e-12);
        EXPECT_LE(ef.h(i, j), std::log(static_cast<double>(p.size(i))) + 1e-12);
      }
    }
  }
}

TEST(ConnectionEntropy, InvariantUnderNodeRelabelling) {
  Rng rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.uniform_int(2, 18);
    const int k = rng.uniform_int(1, n);
    const Graph g = random_graph(rng, n, 0.3);
    const auto membership = random_membership(rng, n, k);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Graph h = g;
    std::vector<int> moved(n);
    for (int u = 0; u < n; ++u) {
      moved[perm[u]] = membership[u];
      for (int v = 0; v < n; ++v) h.adjacency(perm[u], perm[v]) = g.adjacency(u, v);
    }
    const auto a = connection_entropy(coarsen(g, Partition::from_membership(membership)));
    const auto b = connection_entropy(coarsen(h, Partition::from_membership(moved)));
    EXPECT_TRUE(a.h.isApprox(b.h, 1e-12) || (a.h - b.h).cwiseAbs().maxCoeff() < 1e-12);
  }
}
