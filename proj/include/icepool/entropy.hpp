#pragma once

#include <cmath>
#include <string>

#include "coarsen.hpp"
#include "error.hpp"
#include "tensor.hpp"

namespace icepool {

// Connection entropy and the stacked edge features [A_coar | H | H^T].
struct EntropyFeatures {
  Matrix h;                   // K x K, h(i, j) = entropy of P_ij, zero on the diagonal
  EdgeTensor edge_features;   // channels: 0 = A_coar, 1 = h, 2 = h^T
};

// P_ij[n]: share of the i->j edges that have the n-th node of cluster i as
// their source endpoint.
inline Vector connection_distribution(const CoarseningResult& cr, int i, int j) {
  if (i == j) throw UndefinedDistributionError("connection_distribution: i == j");
  const Matrix* block = cr.block(i, j);
  if (block == nullptr || block->sum() == 0.0)
    throw UndefinedDistributionError("no edges between clusters " + std::to_string(i) + " and " +
                                     std::to_string(j));
  return block->rowwise().sum() / block->sum();
}

// -sum p ln p with 0 ln 0 = 0.
inline double shannon_entropy(const Vector& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

inline EntropyFeatures connection_entropy(const CoarseningResult& cr) {
  const int k = cr.k();
  EntropyFeatures out;
  out.h = Matrix::Zero(k, k);
  for (const auto& [pair, block] : cr.pair_blocks) {
    if (block.sum() == 0.0) continue;
    out.h(pair.first, pair.second) = shannon_entropy(connection_distribution(cr, pair.first, pair.second));
  }
  out.edge_features = EdgeTensor(k, 3);
  out.edge_features.channels[0] = cr.a_coar;
  out.edge_features.channels[1] = out.h;
  out.edge_features.channels[2] = out.h.transpose();
  return out;
}

}  // namespace icepool
