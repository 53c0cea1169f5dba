#pragma once

#include <map>
#include <utility>
#include <vector>

#include "error.hpp"
#include "graph.hpp"
#include "partition.hpp"

namespace icepool {

// Ordered cluster pair (source, target).
using ClusterPair = std::pair<int, int>;

// Map from ordered cluster pair to its N_i x N_j binary block. Only pairs
// with at least one nonzero entry are stored.
using PairBlocks = std::map<ClusterPair, Matrix>;

struct CoarseningResult {
  Matrix a_coar;  // K x K, integer-valued: S^T A S
  Matrix x_coar;  // K x d: S^T X
  Matrix a_int;   // N x N intra-cluster edges
  Matrix a_ext;   // N x N inter-cluster edges
  PairBlocks pair_blocks;

  int k() const { return static_cast<int>(a_coar.rows()); }

  const Matrix* block(int i, int j) const {
    const auto it = pair_blocks.find({i, j});
    return it == pair_blocks.end() ? nullptr : &it->second;
  }
};

// Rows of `a` indexed by cluster i's nodes, columns by cluster j's nodes.
inline Matrix cluster_block(const Matrix& a, const Partition& p, int i, int j) {
  return a(p.nodes(i), p.nodes(j));
}

// Collects the nonzero off-diagonal cluster blocks of an N x N matrix.
inline PairBlocks nonzero_pair_blocks(const Matrix& a, const Partition& p) {
  PairBlocks blocks;
  for (int i = 0; i < p.k(); ++i)
    for (int j = 0; j < p.k(); ++j) {
      if (i == j) continue;
      Matrix b = cluster_block(a, p, i, j);
      if (b.cwiseAbs().maxCoeff() != 0.0) blocks.emplace(ClusterPair{i, j}, std::move(b));
    }
  return blocks;
}

inline CoarseningResult coarsen(const Graph& g, const Partition& p) {
  if (p.n() != g.n) throw ArgumentError("coarsen: partition does not cover the graph");
  const Matrix s = assignment_matrix(p);
  CoarseningResult r;
  r.a_int = (s * s.transpose()).cwiseProduct(g.adjacency);
  r.a_ext = g.adjacency - r.a_int;
  r.a_coar = s.transpose() * g.adjacency * s;
  r.x_coar = s.transpose() * g.features;
  r.pair_blocks = nonzero_pair_blocks(g.adjacency, p);
  return r;
}

// Boolean reachability within `radius` hops: nonzero pattern of
// A^radius + A^(radius-1), with A^0 = I and entries saturating at 1.
inline Matrix boolean_reach(const Matrix& adjacency, int radius) {
  if (radius < 1) throw ArgumentError("radius must be >= 1");
  const auto n = adjacency.rows();
  auto saturate = [](Matrix m) { return m.unaryExpr([](double v) { return v != 0.0 ? 1.0 : 0.0; }).eval(); };
  const Matrix a = saturate(adjacency);
  Matrix previous = Matrix::Identity(n, n);  // A^(p-1)
  Matrix current = a;                        // A^p
  for (int step = 1; step < radius; ++step) {
    previous = current;
    current = saturate(current * a);
  }
  return saturate(current + previous);
}

// Extended inter-cluster blocks A'_{i->j} for neighbourhood radius p.
inline PairBlocks extended_pair_blocks(const Graph& g, const Partition& p, int radius) {
  if (p.n() != g.n) throw ArgumentError("extended_pair_blocks: partition does not cover the graph");
  return nonzero_pair_blocks(boolean_reach(g.adjacency, radius), p);
}

}  // namespace icepool
