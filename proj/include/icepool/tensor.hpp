#pragma once

#include <array>
#include <cstddef>

#include "graph.hpp"

namespace icepool {

// K x K x C edge-feature tensor stored as one K x K matrix per channel.
struct EdgeTensor {
  std::vector<Matrix> channels;

  EdgeTensor() = default;
  EdgeTensor(Eigen::Index k, std::size_t depth) : channels(depth, Matrix::Zero(k, k)) {}

  Eigen::Index k() const { return channels.empty() ? 0 : channels.front().rows(); }
  std::size_t depth() const { return channels.size(); }

  double& operator()(Eigen::Index i, Eigen::Index j, std::size_t p) { return channels[p](i, j); }
  double operator()(Eigen::Index i, Eigen::Index j, std::size_t p) const { return channels[p](i, j); }

  // Feature vector E_{ij.} as a row.
  Eigen::RowVectorXd fiber(Eigen::Index i, Eigen::Index j) const {
    Eigen::RowVectorXd out(static_cast<Eigen::Index>(depth()));
    for (std::size_t p = 0; p < depth(); ++p) out(static_cast<Eigen::Index>(p)) = channels[p](i, j);
    return out;
  }
};

}  // namespace icepool
