#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "coarsen.hpp"
#include "error.hpp"
#include "partition.hpp"
#include "svd.hpp"

namespace icepool {

// Singular values at or below this fraction of a block's largest singular
// value count as zero: those components are treated as missing.
inline constexpr double kSvdTolerance = 1e-12;

struct SvdPoolOptions {
  int rank = 1;               // retained components per block
  int radius = 1;             // neighbourhood radius; 1 = plain inter-cluster blocks
  bool weight_by_sqrt_sigma = true;
};

// Precomputed SVDPool operators for one (graph, partition).
//
// aggregation[l] is the K x N matrix whose row j is the sum over source
// clusters i != j of the upsampled (optionally sqrt(sigma)-weighted) l-th
// left singular vector of block (i, j). Row j is therefore supported on the
// nodes of clusters connected to j. pooled[l] = aggregation[l] * X.
struct SvdPoolComponents {
  SvdPoolOptions options;
  std::map<ClusterPair, SvdTriplet> per_pair;  // unweighted triplets, sign-canonical
  std::vector<Matrix> aggregation;
  std::vector<Matrix> pooled;

  int rank() const { return options.rank; }
};

// Number of singular values above the relative zero threshold.
inline Eigen::Index numerical_rank(const SvdTriplet& t, double tol = kSvdTolerance) {
  if (t.sigma.size() == 0) return 0;
  const double threshold = tol * t.sigma(0);
  Eigen::Index r = 0;
  while (r < t.sigma.size() && t.sigma(r) > threshold && t.sigma(r) > 0.0) ++r;
  return r;
}

// Components of `t` that take part in pooling: the leading min(rank, numerical rank).
inline Eigen::Index retained_components(const SvdTriplet& t, int rank) {
  return std::min<Eigen::Index>(rank, numerical_rank(t));
}

inline double component_weight(const SvdTriplet& t, Eigen::Index l, bool weighted) {
  return weighted ? std::sqrt(t.sigma(l)) : 1.0;
}

// Blocks SVDPool operates on: A_{i->j} for radius 1, A'_{i->j} otherwise.
inline PairBlocks svdpool_blocks(const Graph& g, const Partition& p, const CoarseningResult& cr,
                                 int radius) {
  return radius == 1 ? cr.pair_blocks : extended_pair_blocks(g, p, radius);
}

inline SvdPoolComponents build_components(const Graph& g, const Partition& p,
                                          const CoarseningResult& cr, const SvdPoolOptions& opt) {
  if (opt.rank < 1) throw ArgumentError("build_components: rank must be >= 1");
  if (opt.radius < 1) throw ArgumentError("build_components: radius must be >= 1");
  SvdPoolComponents comps;
  comps.options = opt;
  for (const auto& [pair, block] : svdpool_blocks(g, p, cr, opt.radius))
    comps.per_pair.emplace(pair, svd(block, kSvdTolerance));

  comps.aggregation.assign(static_cast<std::size_t>(opt.rank), Matrix::Zero(p.k(), g.n));
  for (const auto& [pair, t] : comps.per_pair) {
    const auto [i, j] = pair;
    const auto& source_nodes = p.nodes(i);
    const Eigen::Index used = retained_components(t, opt.rank);
    for (Eigen::Index l = 0; l < used; ++l) {
      const double w = component_weight(t, l, opt.weight_by_sqrt_sigma);
      Matrix& agg = comps.aggregation[static_cast<std::size_t>(l)];
      for (std::size_t m = 0; m < source_nodes.size(); ++m)
        agg(j, source_nodes[m]) += w * t.u(static_cast<Eigen::Index>(m), l);
    }
  }
  comps.pooled.reserve(comps.aggregation.size());
  for (const auto& agg : comps.aggregation) comps.pooled.push_back(agg * g.features);
  return comps;
}

// Largest numerical rank over all blocks; the rank at which reconstruction is exact.
inline int required_rank(const SvdPoolComponents& comps) {
  Eigen::Index r = 0;
  for (const auto& [pair, t] : comps.per_pair) r = std::max(r, numerical_rank(t));
  return static_cast<int>(r);
}

struct ReconstructionReport {
  double residual = 0.0;       // max-abs elementwise error against the target
  bool expected_exact = false; // preconditions of exact reconstruction hold
  bool extended_target = false;  // target is the radius-extended inter-cluster matrix
  std::string note;
};

// Sum over ordered pairs and retained components of the upsampled outer
// products u'_l v'_l^T, compared elementwise against A_ext (radius 1) or the
// extended inter-cluster matrix. Exactness requires sqrt(sigma) weighting
// and rank >= required_rank(comps).
inline ReconstructionReport verify_reconstruction(const Graph& g, const Partition& p,
                                                  const SvdPoolComponents& comps) {
  const auto& opt = comps.options;
  Matrix target = Matrix::Zero(g.n, g.n);
  if (opt.radius == 1) {
    const Matrix s = assignment_matrix(p);
    target = g.adjacency - (s * s.transpose()).cwiseProduct(g.adjacency);
  } else {
    for (const auto& [pair, block] : extended_pair_blocks(g, p, opt.radius))
      target(p.nodes(pair.first), p.nodes(pair.second)) = block;
  }

  Matrix recon = Matrix::Zero(g.n, g.n);
  for (const auto& [pair, t] : comps.per_pair) {
    const auto [i, j] = pair;
    Matrix block = Matrix::Zero(t.u.rows(), t.v.rows());
    const Eigen::Index used = std::clamp<Eigen::Index>(opt.rank, 0, numerical_rank(t));
    for (Eigen::Index l = 0; l < used; ++l) {
      const double w = component_weight(t, l, opt.weight_by_sqrt_sigma);
      block += (w * t.u.col(l)) * (w * t.v.col(l)).transpose();
    }
    recon(p.nodes(i), p.nodes(j)) += block;
  }

  ReconstructionReport report;
  report.residual = g.n == 0 ? 0.0 : (recon - target).cwiseAbs().maxCoeff();
  report.extended_target = opt.radius != 1;
  const bool full_rank = opt.rank >= required_rank(comps);
  report.expected_exact = opt.weight_by_sqrt_sigma && full_rank;
  if (!opt.weight_by_sqrt_sigma)
    report.note = "not expected to vanish: components are not sqrt(sigma)-weighted";
  else if (!full_rank)
    report.note = "not expected to vanish: rank " + std::to_string(opt.rank) + " < required " +
                  std::to_string(required_rank(comps));
  else if (report.extended_target)
    report.note = "target is the radius-" + std::to_string(opt.radius) + " extended inter-cluster matrix";
  return report;
}

}  // namespace icepool
