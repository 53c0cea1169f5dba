#pragma once

// Reader and writer for the TU graph-classification flat-file layout:
//   <DS>_A.txt                one "u, v" pair per line, 1-based global node ids
//   <DS>_graph_indicator.txt  graph id of node i on line i
//   <DS>_graph_labels.txt     class value of graph g on line g
//   <DS>_node_labels.txt      optional, discrete label of node i on line i

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "graph.hpp"

namespace icepool {

namespace detail {

struct NumberedLine {
  std::size_t number;
  std::string text;
};

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Non-blank lines of a file, each tagged with its 1-based line number.
inline std::vector<NumberedLine> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open required file " + path.string());
  std::vector<NumberedLine> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    out.push_back({number, line});
  }
  return out;
}

inline long long parse_integer(std::string_view token, const std::string& file, std::size_t line) {
  token = trim(token);
  long long value = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end || token.empty())
    throw FormatError(file, line, "expected an integer, got '" + std::string(token) + "'");
  return value;
}

inline std::pair<long long, long long> parse_pair(std::string_view text, const std::string& file,
                                                  std::size_t line) {
  const auto comma = text.find(',');
  if (comma == std::string_view::npos)
    throw FormatError(file, line, "expected 'u, v' edge pair");
  return {parse_integer(text.substr(0, comma), file, line),
          parse_integer(text.substr(comma + 1), file, line)};
}

template <typename T>
std::vector<T> sorted_unique(std::vector<T> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

template <typename T>
int index_of(const std::vector<T>& sorted, T value) {
  return static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), value) - sorted.begin());
}

}  // namespace detail

inline std::filesystem::path tu_file(const std::filesystem::path& root, const std::string& name,
                                     const std::string& suffix) {
  return root / (name + "_" + suffix + ".txt");
}

// Loads a TU dataset. Edges are symmetrized, self-loops dropped and
// duplicates collapsed. Node labels (when present) become one-hot features;
// otherwise features are degree one-hots capped at `degree_cap` buckets.
inline Dataset load_tu_dataset(const std::filesystem::path& root, const std::string& name,
                               int degree_cap = kDefaultDegreeCap) {
  namespace fs = std::filesystem;
  const fs::path a_path = tu_file(root, name, "A");
  const fs::path indicator_path = tu_file(root, name, "graph_indicator");
  const fs::path labels_path = tu_file(root, name, "graph_labels");
  const fs::path node_labels_path = tu_file(root, name, "node_labels");
  for (const auto& p : {a_path, indicator_path, labels_path})
    if (!fs::exists(p)) throw IngestionError("missing required file " + p.string());

  // Graph membership of every node.
  const auto indicator_lines = detail::read_lines(indicator_path);
  const std::string indicator_file = indicator_path.filename().string();
  std::vector<long long> graph_of_node;
  graph_of_node.reserve(indicator_lines.size());
  for (const auto& l : indicator_lines)
    graph_of_node.push_back(detail::parse_integer(l.text, indicator_file, l.number));
  const auto graph_ids = detail::sorted_unique(graph_of_node);
  const std::size_t num_nodes = graph_of_node.size();

  std::vector<int> local_index(num_nodes);
  std::vector<int> graph_slot(num_nodes);
  std::vector<int> node_count(graph_ids.size(), 0);
  for (std::size_t v = 0; v < num_nodes; ++v) {
    const int slot = detail::index_of(graph_ids, graph_of_node[v]);
    graph_slot[v] = slot;
    local_index[v] = node_count[static_cast<std::size_t>(slot)]++;
  }

  // Graph labels, addressed by graph id (1-based line order).
  const auto label_lines = detail::read_lines(labels_path);
  const std::string labels_file = labels_path.filename().string();
  std::vector<long long> raw_labels;
  raw_labels.reserve(label_lines.size());
  for (const auto& l : label_lines)
    raw_labels.push_back(detail::parse_integer(l.text, labels_file, l.number));
  std::vector<long long> graph_label_value(graph_ids.size());
  for (std::size_t s = 0; s < graph_ids.size(); ++s) {
    const long long id = graph_ids[s];
    if (id < 1 || static_cast<std::size_t>(id) > raw_labels.size())
      throw FormatError(labels_file, 0,
                        "no label line for graph id " + std::to_string(id));
    graph_label_value[s] = raw_labels[static_cast<std::size_t>(id - 1)];
  }
  const auto class_values = detail::sorted_unique(graph_label_value);

  // Edge lists, local to each graph.
  std::vector<std::vector<Edge>> edges(graph_ids.size());
  const std::string a_file = a_path.filename().string();
  for (const auto& l : detail::read_lines(a_path)) {
    const auto [u, v] = detail::parse_pair(l.text, a_file, l.number);
    if (u < 1 || v < 1 || static_cast<std::size_t>(u) > num_nodes ||
        static_cast<std::size_t>(v) > num_nodes)
      throw FormatError(a_file, l.number,
                        "node id out of range [1, " + std::to_string(num_nodes) + "]");
    const auto iu = static_cast<std::size_t>(u - 1);
    const auto iv = static_cast<std::size_t>(v - 1);
    if (graph_slot[iu] != graph_slot[iv])
      throw FormatError(a_file, l.number, "edge joins nodes of different graphs");
    edges[static_cast<std::size_t>(graph_slot[iu])].emplace_back(local_index[iu], local_index[iv]);
  }

  // Optional discrete node labels.
  std::optional<std::vector<long long>> node_labels;
  if (fs::exists(node_labels_path)) {
    const auto lines = detail::read_lines(node_labels_path);
    const std::string file = node_labels_path.filename().string();
    if (lines.size() != num_nodes)
      throw FormatError(file, 0,
                        "expected " + std::to_string(num_nodes) + " node label lines, got " +
                            std::to_string(lines.size()));
    std::vector<long long> values;
    values.reserve(num_nodes);
    for (const auto& l : lines) values.push_back(detail::parse_integer(l.text, file, l.number));
    node_labels = std::move(values);
  }

  Dataset ds;
  ds.num_classes = static_cast<int>(class_values.size());
  ds.class_values = class_values;
  ds.degree_cap = degree_cap;
  ds.graphs.resize(graph_ids.size());
  for (std::size_t s = 0; s < graph_ids.size(); ++s) {
    Graph& g = ds.graphs[s];
    g.n = node_count[s];
    g.adjacency = adjacency_from_edges(g.n, edges[s]);
    g.label = detail::index_of(class_values, graph_label_value[s]);
    g.name = name + "/" + std::to_string(graph_ids[s]);
  }

  if (node_labels) {
    const auto values = detail::sorted_unique(*node_labels);
    ds.feature_source = FeatureSource::node_labels;
    ds.node_label_values = values;
    ds.feature_dim = static_cast<int>(values.size());
    for (std::size_t s = 0; s < ds.graphs.size(); ++s)
      ds.graphs[s].features = Matrix::Zero(ds.graphs[s].n, ds.feature_dim);
    for (std::size_t v = 0; v < num_nodes; ++v) {
      Graph& g = ds.graphs[static_cast<std::size_t>(graph_slot[v])];
      g.features(local_index[v], detail::index_of(values, (*node_labels)[v])) = 1.0;
    }
  } else {
    assign_degree_features(ds, degree_cap);
  }
  return ds;
}

// Writes `ds` in TU layout under `root`. Node labels are emitted only for
// datasets whose features came from node labels; degree features are
// recomputed on load.
inline void write_tu_dataset(const Dataset& ds, const std::filesystem::path& root,
                             const std::string& name) {
  namespace fs = std::filesystem;
  fs::create_directories(root);
  auto open = [&](const std::string& suffix) {
    const fs::path p = tu_file(root, name, suffix);
    std::ofstream out(p);
    if (!out) throw IngestionError("cannot write " + p.string());
    return out;
  };
  auto a_out = open("A");
  auto indicator_out = open("graph_indicator");
  auto labels_out = open("graph_labels");
  std::optional<std::ofstream> node_labels_out;
  if (ds.feature_source == FeatureSource::node_labels) node_labels_out = open("node_labels");

  long long offset = 0;
  for (std::size_t s = 0; s < ds.graphs.size(); ++s) {
    const Graph& g = ds.graphs[s];
    for (const auto& [u, v] : g.edges()) {
      a_out << offset + u + 1 << ", " << offset + v + 1 << '\n';
      a_out << offset + v + 1 << ", " << offset + u + 1 << '\n';
    }
    for (int i = 0; i < g.n; ++i) {
      indicator_out << s + 1 << '\n';
      if (node_labels_out) {
        Eigen::Index column = 0;
        g.features.row(i).maxCoeff(&column);
        *node_labels_out << ds.node_label_values.at(static_cast<std::size_t>(column)) << '\n';
      }
    }
    const long long label_value = ds.class_values.empty()
                                      ? g.label
                                      : ds.class_values.at(static_cast<std::size_t>(g.label));
    labels_out << label_value << '\n';
    offset += g.n;
  }
}

}  // namespace icepool
