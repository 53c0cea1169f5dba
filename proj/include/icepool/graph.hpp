#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace icepool {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Undirected edge between 0-based node ids.
using Edge = std::pair<int, int>;

// Default cap on one-hot degree buckets.
inline constexpr int kDefaultDegreeCap = 64;

// One graph instance. The adjacency is dense, symmetric, binary and has an
// all-zero diagonal; feature rows correspond to nodes.
struct Graph {
  int n = 0;
  Matrix adjacency;
  Matrix features;
  int label = 0;
  std::string name;

  int degree(int node) const {
    return static_cast<int>(adjacency.row(node).sum());
  }

  std::vector<int> degrees() const {
    std::vector<int> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = degree(i);
    return out;
  }

  std::size_t edge_count() const {
    return static_cast<std::size_t>(adjacency.sum() / 2.0);
  }

  // Undirected edges with u < v, in row-major order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (adjacency(i, j) != 0.0) out.emplace_back(i, j);
    return out;
  }

  std::vector<int> neighbors(int node) const {
    std::vector<int> out;
    for (int j = 0; j < n; ++j)
      if (adjacency(node, j) != 0.0) out.push_back(j);
    return out;
  }
};

// Builds a symmetric, loop-free binary adjacency from an edge list.
// Duplicates and reversed pairs collapse; self-loops are dropped.
inline Matrix adjacency_from_edges(int n, const std::vector<Edge>& edges) {
  if (n < 0) throw ArgumentError("adjacency_from_edges: negative node count");
  Matrix a = Matrix::Zero(n, n);
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw ArgumentError("adjacency_from_edges: node id out of range");
    if (u == v) continue;
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  return a;
}

// Row i is one-hot at min(degree(i), max_bucket).
inline Matrix degree_features(const Graph& g, int max_bucket) {
  if (max_bucket < 1) throw ArgumentError("degree_features: max_bucket must be >= 1");
  Matrix x = Matrix::Zero(g.n, max_bucket + 1);
  for (int i = 0; i < g.n; ++i) x(i, std::min(g.degree(i), max_bucket)) = 1.0;
  return x;
}

// Throws ArgumentError describing the first violated Graph invariant.
inline void check_graph(const Graph& g) {
  if (g.adjacency.rows() != g.n || g.adjacency.cols() != g.n)
    throw ArgumentError("graph '" + g.name + "': adjacency is not n x n");
  if (g.features.rows() != g.n)
    throw ArgumentError("graph '" + g.name + "': feature rows differ from node count");
  for (int i = 0; i < g.n; ++i) {
    if (g.adjacency(i, i) != 0.0) throw ArgumentError("graph '" + g.name + "': self-loop");
    for (int j = 0; j < g.n; ++j) {
      const double v = g.adjacency(i, j);
      if (v != 0.0 && v != 1.0) throw ArgumentError("graph '" + g.name + "': non-binary adjacency");
      if (v != g.adjacency(j, i)) throw ArgumentError("graph '" + g.name + "': asymmetric adjacency");
    }
  }
}

// Where a dataset's node features came from; drives TU re-serialization.
enum class FeatureSource { node_labels, degree };

struct Dataset {
  std::vector<Graph> graphs;
  int num_classes = 0;
  int feature_dim = 0;

  FeatureSource feature_source = FeatureSource::degree;
  // Original TU node-label values, indexed by one-hot column (node_labels source).
  std::vector<long long> node_label_values;
  // Original TU graph-label values, indexed by class id.
  std::vector<long long> class_values;
  // Degree bucket cap used for degree features.
  int degree_cap = kDefaultDegreeCap;

  std::size_t size() const { return graphs.size(); }
  bool empty() const { return graphs.empty(); }

  double mean_node_count() const {
    if (graphs.empty()) return 0.0;
    double total = 0.0;
    for (const auto& g : graphs) total += g.n;
    return total / static_cast<double>(graphs.size());
  }
};

inline void check_dataset(const Dataset& ds) {
  for (const auto& g : ds.graphs) {
    check_graph(g);
    if (g.label < 0 || g.label >= ds.num_classes)
      throw ArgumentError("graph '" + g.name + "': label outside [0, num_classes)");
    if (g.features.cols() != ds.feature_dim)
      throw ArgumentError("graph '" + g.name + "': feature dim differs from dataset");
  }
}

// Replaces every graph's features by degree one-hots with a shared bucket
// count min(max degree, cap) + 1.
inline void assign_degree_features(Dataset& ds, int cap = kDefaultDegreeCap) {
  int max_degree = 0;
  for (const auto& g : ds.graphs)
    for (int d : g.degrees()) max_degree = std::max(max_degree, d);
  const int bucket = std::max(1, std::min(max_degree, cap));
  for (auto& g : ds.graphs) g.features = degree_features(g, bucket);
  ds.feature_dim = bucket + 1;
  ds.feature_source = FeatureSource::degree;
  ds.degree_cap = cap;
  ds.node_label_values.clear();
}

}  // namespace icepool
