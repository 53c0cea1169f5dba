#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "error.hpp"
#include "graph.hpp"
#include "random.hpp"

namespace icepool {

// Hard assignment of N nodes to K nonempty clusters.
//
// node_lists[k] is the ordered node list of cluster k (ascending node index);
// it fixes the column order of the sampling operator for that cluster and
// therefore the row/column order of every inter-cluster block.
class Partition {
 public:
  Partition() = default;

  // Compacts arbitrary ids to 0..K-1 in ascending order of the original id.
  static Partition from_membership(const std::vector<long long>& ids) {
    std::vector<long long> distinct = ids;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<int> dense(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
      dense[i] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), ids[i]) -
                                  distinct.begin());
    return Partition(std::move(dense), static_cast<int>(distinct.size()));
  }

  static Partition from_membership(const std::vector<int>& ids) {
    return from_membership(std::vector<long long>(ids.begin(), ids.end()));
  }

  static Partition identity(int n) {
    std::vector<int> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), 0);
    return Partition(std::move(ids), n);
  }

  int k() const { return k_; }
  int n() const { return static_cast<int>(membership_.size()); }
  const std::vector<int>& membership() const { return membership_; }
  int cluster_of(int node) const { return membership_[static_cast<std::size_t>(node)]; }
  const std::vector<std::vector<int>>& node_lists() const { return node_lists_; }
  const std::vector<int>& nodes(int cluster) const {
    return node_lists_[static_cast<std::size_t>(cluster)];
  }
  int size(int cluster) const { return static_cast<int>(nodes(cluster).size()); }
  std::vector<int> sizes() const {
    std::vector<int> out;
    out.reserve(node_lists_.size());
    for (const auto& l : node_lists_) out.push_back(static_cast<int>(l.size()));
    return out;
  }

  friend bool operator==(const Partition& a, const Partition& b) {
    return a.membership_ == b.membership_;
  }

 private:
  Partition(std::vector<int> membership, int k) : k_{k}, membership_{std::move(membership)} {
    node_lists_.assign(static_cast<std::size_t>(k_), {});
    for (std::size_t i = 0; i < membership_.size(); ++i)
      node_lists_[static_cast<std::size_t>(membership_[i])].push_back(static_cast<int>(i));
  }

  int k_ = 0;
  std::vector<int> membership_;
  std::vector<std::vector<int>> node_lists_;
};

// S: N x K, S(i, k) = 1 iff node i is in cluster k.
inline Matrix assignment_matrix(const Partition& p) {
  Matrix s = Matrix::Zero(p.n(), p.k());
  for (int i = 0; i < p.n(); ++i) s(i, p.cluster_of(i)) = 1.0;
  return s;
}

// C^(k): N x N_k selection matrix whose column m is the indicator of the m-th
// node of cluster k.
inline Matrix sampling_operator(const Partition& p, int cluster) {
  const auto& nodes = p.nodes(cluster);
  Matrix c = Matrix::Zero(p.n(), static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t m = 0; m < nodes.size(); ++m) c(nodes[m], static_cast<Eigen::Index>(m)) = 1.0;
  return c;
}

// Greedy heavy-edge matching.
//
// Each pass visits the current clusters in a seeded pseudo-random order and
// merges every unmatched cluster with its unmatched neighbour of largest
// connecting edge count; equal weights go to the neighbour that comes first
// in the shuffled order. Passes repeat until at most target_k clusters
// remain or no two clusters share an edge. Isolated nodes never join a
// matching; if clusters are still above target_k they are folded, in node
// order, into the currently smallest cluster (lowest id on ties).
inline Partition heavy_edge_partition(const Graph& g, int target_k, std::uint64_t seed) {
  if (target_k < 1 || target_k > g.n)
    throw ArgumentError("heavy_edge_partition: target_k must lie in [1, " + std::to_string(g.n) +
                        "]");
  const int n = g.n;
  std::vector<int> cluster(static_cast<std::size_t>(n));
  std::iota(cluster.begin(), cluster.end(), 0);
  int count = n;

  // Dense connection counts between current clusters (relabelled each pass).
  auto relabel = [&]() {
    std::vector<int> remap(static_cast<std::size_t>(n), -1);
    int next = 0;
    for (int i = 0; i < n; ++i) {
      auto& r = remap[static_cast<std::size_t>(cluster[static_cast<std::size_t>(i)])];
      if (r < 0) r = next++;
      cluster[static_cast<std::size_t>(i)] = r;
    }
    count = next;
  };

  Rng rng(seed);
  while (count > target_k) {
    Matrix weight = Matrix::Zero(count, count);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (g.adjacency(i, j) != 0.0) {
          const int a = cluster[static_cast<std::size_t>(i)];
          const int b = cluster[static_cast<std::size_t>(j)];
          if (a != b) weight(a, b) += 1.0;
        }

    std::vector<int> order(static_cast<std::size_t>(count));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<int> rank(static_cast<std::size_t>(count));
    for (int r = 0; r < count; ++r) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r;

    std::vector<int> merged_into(static_cast<std::size_t>(count), -1);
    int remaining = count;
    bool merged_any = false;
    for (int a : order) {
      if (remaining <= target_k) break;
      if (merged_into[static_cast<std::size_t>(a)] >= 0) continue;
      int best = -1;
      for (int b = 0; b < count; ++b) {
        if (b == a || merged_into[static_cast<std::size_t>(b)] >= 0 || weight(a, b) == 0.0) continue;
        if (best < 0 || weight(a, b) > weight(a, best) ||
            (weight(a, b) == weight(a, best) &&
             rank[static_cast<std::size_t>(b)] < rank[static_cast<std::size_t>(best)]))
          best = b;
      }
      if (best < 0) continue;
      merged_into[static_cast<std::size_t>(a)] = a;
      merged_into[static_cast<std::size_t>(best)] = a;
      --remaining;
      merged_any = true;
    }
    if (!merged_any) break;
    for (auto& c : cluster) {
      const int m = merged_into[static_cast<std::size_t>(c)];
      if (m >= 0) c = m;
    }
    relabel();
  }

  if (count > target_k) {
    std::vector<int> size(static_cast<std::size_t>(count), 0);
    for (int c : cluster) ++size[static_cast<std::size_t>(c)];
    for (int i = 0; i < n && count > target_k; ++i) {
      const int own = cluster[static_cast<std::size_t>(i)];
      if (g.degree(i) != 0 || size[static_cast<std::size_t>(own)] != 1) continue;
      int smallest = -1;
      for (int c = 0; c < static_cast<int>(size.size()); ++c) {
        if (c == own || size[static_cast<std::size_t>(c)] == 0) continue;
        if (smallest < 0 || size[static_cast<std::size_t>(c)] < size[static_cast<std::size_t>(smallest)])
          smallest = c;
      }
      if (smallest < 0) break;
      --size[static_cast<std::size_t>(own)];
      ++size[static_cast<std::size_t>(smallest)];
      cluster[static_cast<std::size_t>(i)] = smallest;
      --count;
    }
  }

  // Canonical ids: clusters numbered by their smallest node.
  std::vector<long long> first_node(static_cast<std::size_t>(n), std::numeric_limits<long long>::max());
  for (int i = 0; i < n; ++i) {
    auto& f = first_node[static_cast<std::size_t>(cluster[static_cast<std::size_t>(i)])];
    f = std::min<long long>(f, i);
  }
  std::vector<long long> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = first_node[static_cast<std::size_t>(cluster[static_cast<std::size_t>(i)])];
  return Partition::from_membership(ids);
}

// Reads one cluster id per non-blank line; ids are compacted to 0..K-1.
inline Partition load_partition(const std::filesystem::path& path, const Graph& g) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open partition file " + path.string());
  const std::string file = path.filename().string();
  std::vector<long long> ids;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::size_t pos = 0;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    long long value = 0;
    try {
      value = std::stoll(line, &pos);
    } catch (const std::exception&) {
      throw FormatError(file, number, "expected an integer cluster id");
    }
    if (line.find_first_not_of(" \t\r", pos) != std::string::npos)
      throw FormatError(file, number, "expected an integer cluster id");
    ids.push_back(value);
  }
  if (ids.size() != static_cast<std::size_t>(g.n))
    throw FormatError(file, 0,
                      "expected " + std::to_string(g.n) + " lines, got " + std::to_string(ids.size()));
  return Partition::from_membership(ids);
}

inline void write_partition(const Partition& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path.string());
  for (int c : p.membership()) out << c << '\n';
}

}  // namespace icepool
