#include <cmath>

#include <gtest/gtest.h>

#include <icepool/svdpool.hpp>

#include "support/oracles.hpp"

using namespace icepool;
using namespace icepool::testing;

namespace {

SvdPoolComponents build(const Graph& g, const Partition& p, int rank, int radius = 1, bool weighted = true) {
  return build_components(g, p, coarsen(g, p), SvdPoolOptions{rank, radius, weighted});
}

struct RandomInstance {
  Graph g;
  Partition p;
};

RandomInstance random_instance(Rng& rng, int max_n, int min_k, int max_k) {
  const int n = rng.uniform_int(min_k, max_n);
  const int k = rng.uniform_int(min_k, std::min(max_k, n));
  RandomInstance r{random_graph(rng, n, rng.uniform(0.1, 0.5)),
                   Partition::from_membership(random_membership(rng, n, k))};
  return r;
}

}  // namespace

TEST(SvdPool, G1FullRankReconstructsExactly) {
  const Graph g = g1();
  const Partition p = g1_partition();
  const auto comps = build(g, p, 2);
  const auto report = verify_reconstruction(g, p, comps);
  EXPECT_TRUE(report.expected_exact);
  EXPECT_FALSE(report.extended_target);
  EXPECT_LE(report.residual, 1e-10);
  EXPECT_EQ(required_rank(comps), 2);
}

TEST(SvdPool, G1AggregationValues) {
  // Block 0->1 has left vectors e0 (sigma sqrt 2) and e1 (sigma 1); block
  // 1->0 has (e3 + e4)/sqrt 2 (sigma sqrt 2) and e5 (sigma 1).
  const Graph g = g1();
  const auto comps = build(g, g1_partition(), 2);
  const double w = std::pow(2.0, 0.25);
  Matrix first = Matrix::Zero(2, 6);
  first(1, 0) = w;
  first(0, 3) = w / std::sqrt(2.0);
  first(0, 4) = w / std::sqrt(2.0);
  Matrix second = Matrix::Zero(2, 6);
  second(1, 1) = 1.0;
  second(0, 5) = 1.0;
  EXPECT_LE((comps.aggregation[0] - first).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((comps.aggregation[1] - second).cwiseAbs().maxCoeff(), 1e-12);
  // X is the identity, so pooled signals equal the operators.
  EXPECT_LE((comps.pooled[0] - first).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SvdPool, SingleClusterHasNoComponents) {
  Rng rng(3);
  const Graph g = random_graph(rng, 10, 0.4);
  const auto comps = build(g, Partition::from_membership(std::vector<int>(10, 0)), 3);
  EXPECT_TRUE(comps.per_pair.empty());
  ASSERT_EQ(comps.aggregation.size(), 3u);
  for (int l = 0; l < 3; ++l) {
    EXPECT_TRUE(comps.aggregation[l].isZero());
    EXPECT_TRUE(comps.pooled[l].isZero());
  }
}

TEST(SvdPool, PerfectReconstructionSweep) {
  Rng rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = random_instance(rng, 30, 2, 6);
    const auto sizes = inst.p.sizes();
    const int n_max = *std::max_element(sizes.begin(), sizes.end());
    const auto comps = build(inst.g, inst.p, n_max);
    const auto report = verify_reconstruction(inst.g, inst.p, comps);
    EXPECT_TRUE(report.expected_exact);
    EXPECT_LE(report.residual, 1e-8) << "trial " << trial;
  }
}

TEST(SvdPool, ZeroedComponentsLeaveAllOfAext) {
  const Graph g = g1();
  const Partition p = g1_partition();
  auto comps = build(g, p, 2);
  comps.options.rank = 0;
  const auto report = verify_reconstruction(g, p, comps);
  EXPECT_FALSE(report.expected_exact);
  EXPECT_EQ(report.residual, 1.0);
}

TEST(SvdPool, UnweightedIsFlaggedNotExact) {
  const Graph g = g1();
  const Partition p = g1_partition();
  const auto report = verify_reconstruction(g, p, build(g, p, 2, 1, false));
  EXPECT_FALSE(report.expected_exact);
  EXPECT_NE(report.note.find("not expected to vanish"), std::string::npos);
  EXPECT_GT(report.residual, 1e-3);
}

TEST(SvdPool, RankOneOnRankTwoBlockLeavesSecondSingularValue) {
  const Graph g = g1();
  const Partition p = g1_partition();
  const auto comps = build(g, p, 1);
  const auto& t = comps.per_pair.at({0, 1});
  const Matrix block = *coarsen(g, p).block(0, 1);
  const Matrix residual = block - t.reconstruct(1);
  EXPECT_NEAR(Eigen::JacobiSVD<Matrix>(residual).singularValues()(0), t.sigma(1), 1e-12);
  EXPECT_NEAR(t.sigma(1), 1.0, 1e-12);
  EXPECT_FALSE(verify_reconstruction(g, p, comps).expected_exact);
}

TEST(SvdPool, BlockResidualNonIncreasingInRank) {
  Rng rng(88);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = random_instance(rng, 20, 2, 5);
    const auto cr = coarsen(inst.g, inst.p);
    const auto comps = build(inst.g, inst.p, 20);
    for (const auto& [pair, t] : comps.per_pair) {
      const Matrix& block = cr.pair_blocks.at(pair);
      double previous = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r <= t.components(); ++r) {
        const double err = (block - t.reconstruct(r)).norm();
        EXPECT_LE(err, previous + 1e-12);
        previous = err;
      }
    }
  }
}

TEST(SvdPool, AggregationSupportedOnNeighbouringClusters) {
  Rng rng(19);
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = random_instance(rng, 24, 2, 6);
    const int radius = rng.uniform_int(1, 3);
    const auto comps = build(inst.g, inst.p, 4, radius);
    for (const auto& agg : comps.aggregation)
      for (int j = 0; j < inst.p.k(); ++j)
        for (int node = 0; node < inst.g.n; ++node) {
          if (agg(j, node) == 0.0) continue;
          const int source = inst.p.cluster_of(node);
          EXPECT_NE(source, j);
          EXPECT_EQ(comps.per_pair.count({source, j}), 1u);
        }
  }
}

TEST(SvdPool, RetainedLeftVectorsOrthogonal) {
  Rng rng(27);
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = random_instance(rng, 24, 2, 6);
    const auto comps = build(inst.g, inst.p, 5);
    for (const auto& [pair, t] : comps.per_pair) {
      const auto r = retained_components(t, 5);
      const Matrix gram = t.u.leftCols(r).transpose() * t.u.leftCols(r);
      EXPECT_LE((gram - Matrix::Identity(r, r)).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(SvdPool, PooledIsAggregationTimesFeatures) {
  Rng rng(44);
  const auto inst = random_instance(rng, 20, 3, 5);
  const auto comps = build(inst.g, inst.p, 3);
  for (std::size_t l = 0; l < comps.aggregation.size(); ++l)
    EXPECT_LE((comps.pooled[l] - comps.aggregation[l] * inst.g.features).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SvdPool, BitwiseDeterministic) {
  Rng rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = random_instance(rng, 25, 2, 6);
    const auto a = build(inst.g, inst.p, 3, 2);
    const auto b = build(inst.g, inst.p, 3, 2);
    for (std::size_t l = 0; l < a.aggregation.size(); ++l) {
      EXPECT_EQ(a.aggregation[l], b.aggregation[l]);
      EXPECT_EQ(a.pooled[l], b.pooled[l]);
    }
  }
}

TEST(SvdPool, ExtendedModeReconstructsItsOwnTarget) {
  Rng rng(52);
  for (int trial = 0; trial < 40; ++trial) {
    const auto inst = random_instance(rng, 20, 2, 5);
    const auto comps = build(inst.g, inst.p, 20, 3);
    const auto report = verify_reconstruction(inst.g, inst.p, comps);
    EXPECT_TRUE(report.extended_target);
    EXPECT_TRUE(report.expected_exact);
    EXPECT_LE(report.residual, 1e-8);
  }
}

TEST(SvdPool, RejectsBadOptions) {
  const Graph g = g1();
  const Partition p = g1_partition();
  EXPECT_THROW(build(g, p, 0), ArgumentError);
  EXPECT_THROW(build(g, p, 1, 0), ArgumentError);
}
