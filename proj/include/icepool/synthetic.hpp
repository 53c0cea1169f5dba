#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "graph.hpp"
#include "random.hpp"

namespace icepool {

enum class SyntheticFamily { two_community, ring_of_cliques };

inline std::string_view to_string(SyntheticFamily f) {
  return f == SyntheticFamily::two_community ? "two_community" : "ring_of_cliques";
}

inline SyntheticFamily parse_synthetic_family(std::string_view s) {
  if (s == "two_community") return SyntheticFamily::two_community;
  if (s == "ring_of_cliques") return SyntheticFamily::ring_of_cliques;
  throw ArgumentError("unknown synthetic family '" + std::string(s) + "'");
}

namespace detail {

// Two Erdos-Renyi communities. Class 0 is sparsely bridged, class 1 densely.
inline std::vector<Edge> two_community_edges(Rng& rng, int label, int& n) {
  const int a = rng.uniform_int(6, 10);
  const int b = rng.uniform_int(6, 10);
  n = a + b;
  constexpr double kIntra = 0.6;
  const double inter = label == 0 ? 0.04 : 0.25;
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const bool same = (u < a) == (v < a);
      if (rng.bernoulli(same ? kIntra : inter)) edges.emplace_back(u, v);
    }
  }
  return edges;
}

// Cliques of 3..5 nodes joined in a cycle by single bridge edges.
// Class 0 has 3 cliques, class 1 has 4.
inline std::vector<Edge> ring_of_cliques_edges(Rng& rng, int label, int& n) {
  const int cliques = label == 0 ? 3 : 4;
  std::vector<int> start;
  std::vector<int> size;
  n = 0;
  for (int c = 0; c < cliques; ++c) {
    start.push_back(n);
    size.push_back(rng.uniform_int(3, 5));
    n += size.back();
  }
  std::vector<Edge> edges;
  for (int c = 0; c < cliques; ++c) {
    for (int u = 0; u < size[c]; ++u)
      for (int v = u + 1; v < size[c]; ++v) edges.emplace_back(start[c] + u, start[c] + v);
    const int next = (c + 1) % cliques;
    edges.emplace_back(start[c] + size[c] - 1, start[next]);
  }
  return edges;
}

}  // namespace detail

// Deterministic two-class dataset; graph i has label i % 2. Features are
// degree one-hots shared across the dataset.
inline Dataset generate_synthetic(SyntheticFamily family, int count, std::uint64_t seed) {
  if (count < 2) throw ArgumentError("generate_synthetic: count must be >= 2");
  Rng rng(seed);
  Dataset ds;
  ds.num_classes = 2;
  ds.class_values = {0, 1};
  ds.graphs.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Graph g;
    g.label = i % 2;
    const auto edges = family == SyntheticFamily::two_community
                           ? detail::two_community_edges(rng, g.label, g.n)
                           : detail::ring_of_cliques_edges(rng, g.label, g.n);
    g.adjacency = adjacency_from_edges(g.n, edges);
    g.name = std::string(to_string(family)) + "/" + std::to_string(i);
    ds.graphs.push_back(std::move(g));
  }
  assign_degree_features(ds);
  return ds;
}

}  // namespace icepool
