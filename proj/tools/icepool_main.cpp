// icepool command-line tool: inspect, verify, train, ablate.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <icepool/archive.hpp>
#include <icepool/pipeline.hpp>
#include <icepool/synthetic.hpp>
#include <icepool/tu_format.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace icepool;

namespace {

enum class Format { json, csv };

struct DatasetOptions {
  std::string tu_root;
  std::string name;
  std::string synthetic;
  int count = 100;
  std::uint64_t data_seed = 0;
  int degree_cap = kDefaultDegreeCap;
};

struct ConfigOptions {
  IceConfig cfg;
  std::string variant = "gat";
  std::string combine = "concat";
  bool no_svdpool = false;
  bool no_cegat = false;
  bool unweighted = false;
  bool raw_edges = false;

  IceConfig resolve() const {
    IceConfig c = cfg;
    c.variant = parse_attention_variant(variant);
    c.combine = parse_combine(combine);
    c.use_svdpool = !no_svdpool;
    c.use_cegat = !no_cegat;
    c.weight_by_sqrt_sigma = !unweighted;
    c.normalize_edges = !raw_edges;
    check_config(c);
    return c;
  }
};

void add_dataset_options(CLI::App* app, DatasetOptions& d) {
  app->add_option("--tu-root", d.tu_root, "Directory holding <NAME>_A.txt etc. (or <NAME>/ subdirectories)");
  app->add_option("--dataset", d.name, "TU dataset name, e.g. MUTAG");
  app->add_option("--synthetic", d.synthetic, "Synthetic family: two_community or ring_of_cliques");
  app->add_option("--count", d.count, "Synthetic graph count")->check(CLI::PositiveNumber);
  app->add_option("--data-seed", d.data_seed, "Synthetic generator seed");
  app->add_option("--degree-cap", d.degree_cap, "Largest degree bucket for degree one-hot features")
      ->check(CLI::PositiveNumber);
}

void add_config_options(CLI::App* app, ConfigOptions& o) {
  app->add_option("--target-k", o.cfg.target_k, "Clusters per graph");
  app->add_option("--rank", o.cfg.rank, "SVDPool components per block");
  app->add_option("--radius", o.cfg.radius, "SVDPool hop radius");
  app->add_option("--variant", o.variant, "Attention variant: gat or egat");
  app->add_option("--combine", o.combine, "How SVDPool signals join X_coar: concat or sum");
  app->add_flag("--no-svdpool", o.no_svdpool, "Disable the SVDPool branch");
  app->add_flag("--no-cegat", o.no_cegat, "Disable the attention layer");
  app->add_flag("--unweighted", o.unweighted, "Do not weight components by sqrt(sigma)");
  app->add_flag("--raw-edge-features", o.raw_edges, "Skip per-graph edge feature normalization");
  app->add_option("--seed", o.cfg.seed, "Seed for partitioning, initialization and the split");
  app->add_option("--epochs", o.cfg.epochs, "Training epochs");
  app->add_option("--learning-rate", o.cfg.learning_rate, "Gradient descent step size");
  app->add_option("--hidden", o.cfg.d_hidden, "Attention output width");
  app->add_option("--validation-fraction", o.cfg.validation_fraction, "Held-out share of graphs");
}

fs::path dataset_dir(const fs::path& root, const std::string& name) {
  if (fs::exists(root / name / (name + "_A.txt"))) return root / name;
  return root;
}

Dataset load(const DatasetOptions& d) {
  if (!d.synthetic.empty()) {
    if (!d.name.empty()) throw ArgumentError("use either --synthetic or --dataset, not both");
    return generate_synthetic(parse_synthetic_family(d.synthetic), d.count, d.data_seed);
  }
  if (d.name.empty()) throw ArgumentError("a dataset is required: --dataset NAME [--tu-root DIR] or --synthetic FAMILY");
  std::string root = d.tu_root;
  if (root.empty()) {
    const char* env = std::getenv("ICEPOOL_TU_ROOT");
    root = env ? env : ".";
  }
  return load_tu_dataset(dataset_dir(root, d.name), d.name, d.degree_cap);
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json config_json(const IceConfig& c) {
  return {{"target_k", c.target_k},
          {"rank", c.rank},
          {"radius", c.radius},
          {"variant", to_string(c.variant)},
          {"use_svdpool", c.use_svdpool},
          {"use_cegat", c.use_cegat},
          {"combine", to_string(c.combine)},
          {"weight_by_sqrt_sigma", c.weight_by_sqrt_sigma},
          {"seed", c.seed},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"d_hidden", c.d_hidden}};
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

int cmd_inspect(const DatasetOptions& d, const ConfigOptions& o, std::optional<int> graph_index, Format fmt) {
  const Dataset ds = load(d);
  if (!graph_index) {
    std::size_t edges = 0;
    for (const auto& g : ds.graphs) edges += g.edge_count();
    const double mean_edges = static_cast<double>(edges) / static_cast<double>(ds.size());
    const std::string source = ds.feature_source == FeatureSource::node_labels ? "node_labels" : "degree";
    if (fmt == Format::csv) {
      std::cout << "graphs,classes,feature_dim,feature_source,mean_nodes,mean_edges\n"
                << ds.size() << ',' << ds.num_classes << ',' << ds.feature_dim << ',' << source << ','
                << ds.mean_node_count() << ',' << mean_edges << '\n';
    } else {
      std::cout << json{{"graphs", ds.size()},         {"classes", ds.num_classes},
                        {"feature_dim", ds.feature_dim}, {"feature_source", source},
                        {"mean_nodes", ds.mean_node_count()}, {"mean_edges", mean_edges}}
                       .dump(2)
                << '\n';
    }
    return 0;
  }
  if (*graph_index < 0 || static_cast<std::size_t>(*graph_index) >= ds.size())
    throw ArgumentError("--graph must lie in [0, " + std::to_string(ds.size()) + ")");
  const Graph& g = ds.graphs[static_cast<std::size_t>(*graph_index)];
  const IceConfig cfg = o.resolve();
  const auto prep = prepare(g, cfg);
  if (fmt == Format::csv) {
    std::cout << "node,cluster\n";
    for (int u = 0; u < g.n; ++u) std::cout << u << ',' << prep.partition.cluster_of(u) << '\n';
    return 0;
  }
  json out{{"name", g.name},
           {"nodes", g.n},
           {"edges", g.edge_count()},
           {"label", g.label},
           {"clusters", prep.partition.k()},
           {"membership", prep.partition.membership()},
           {"a_coar", matrix_json(prep.coarsening.a_coar)},
           {"entropy", matrix_json(prep.entropy.h)},
           {"timings_ms", prep.timings_ms}};
  if (prep.reconstruction) out["reconstruction_residual"] = prep.reconstruction->residual;
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_verify(const DatasetOptions& d, const ConfigOptions& o, bool full_rank, double tolerance, Format fmt) {
  const Dataset ds = load(d);
  IceConfig cfg = o.resolve();
  cfg.use_svdpool = true;
  if (full_rank) {
    int largest = 1;
    for (const auto& g : ds.graphs) largest = std::max(largest, g.n);
    cfg.rank = largest;
  }
  const auto prepared = prepare_dataset(ds, cfg);
  int failures = 0;
  double worst = 0.0;
  json rows = json::array();
  if (fmt == Format::csv) std::cout << "graph,residual,expected_exact,pass,note\n";
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    const auto& r = *prepared[i].reconstruction;
    const bool pass = !r.expected_exact || r.residual <= tolerance;
    failures += !pass;
    if (r.expected_exact) worst = std::max(worst, r.residual);
    if (fmt == Format::csv)
      std::cout << '"' << ds.graphs[i].name << "\"," << r.residual << ',' << r.expected_exact << ',' << pass << ",\""
                << r.note << "\"\n";
    else
      rows.push_back({{"graph", ds.graphs[i].name},
                      {"residual", r.residual},
                      {"expected_exact", r.expected_exact},
                      {"pass", pass},
                      {"note", r.note}});
  }
  if (fmt == Format::json)
    std::cout << json{{"config", config_json(cfg)},
                      {"tolerance", tolerance},
                      {"max_exact_residual", worst},
                      {"failures", failures},
                      {"graphs", rows}}
                     .dump(2)
              << '\n';
  if (failures) std::cerr << failures << " graph(s) exceed residual tolerance " << tolerance << '\n';
  return failures ? 1 : 0;
}

int cmd_train(const DatasetOptions& d, const ConfigOptions& o, int folds, const std::string& save, Format fmt) {
  const Dataset ds = load(d);
  const IceConfig cfg = o.resolve();
  if (folds > 0) {
    const auto scores = cross_validate(ds, cfg, folds);
    double mean = 0.0;
    for (double s : scores) mean += s / static_cast<double>(scores.size());
    if (fmt == Format::csv) {
      std::cout << "fold,test_accuracy\n";
      for (std::size_t f = 0; f < scores.size(); ++f) std::cout << f << ',' << scores[f] << '\n';
    } else {
      std::cout << json{{"config", config_json(cfg)}, {"folds", scores}, {"mean_accuracy", mean}}.dump(2) << '\n';
    }
    return 0;
  }
  const auto prepared = prepare_dataset(ds, cfg);
  const auto result = train(ds, prepared, cfg);
  const auto acc = final_accuracy(ds, prepared, cfg, result);
  if (!save.empty()) save_params(save, result.params);
  if (fmt == Format::csv) {
    std::cout << "epoch,loss,train_accuracy,validation_accuracy\n";
    for (const auto& m : result.history)
      std::cout << m.epoch << ',' << m.loss << ',' << m.train_accuracy << ',' << m.validation_accuracy << '\n';
    return 0;
  }
  json history = json::array();
  for (const auto& m : result.history)
    history.push_back({{"epoch", m.epoch},
                       {"loss", m.loss},
                       {"train_accuracy", m.train_accuracy},
                       {"validation_accuracy", nullable(m.validation_accuracy)}});
  std::cout << json{{"config", config_json(cfg)},
                    {"train_graphs", result.train_indices.size()},
                    {"validation_graphs", result.validation_indices.size()},
                    {"final_train_accuracy", acc.train},
                    {"final_validation_accuracy", nullable(acc.validation)},
                    {"history", history}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_ablate(const DatasetOptions& d, const ConfigOptions& o, Format fmt) {
  const Dataset ds = load(d);
  const auto rows = ablate(ds, o.resolve());
  if (fmt == Format::csv) {
    std::cout << ablation_csv(rows);
    return 0;
  }
  json out = json::array();
  for (const auto& r : rows) {
    json row{{"configuration", r.name},
             {"use_cegat", r.config.use_cegat},
             {"variant", r.config.use_cegat ? json(to_string(r.config.variant)) : json(nullptr)},
             {"use_svdpool", r.config.use_svdpool},
             {"train_accuracy", r.train_accuracy},
             {"validation_accuracy", nullable(r.validation_accuracy)},
             {"mean_reconstruction_residual", nullptr}};
    if (r.mean_reconstruction_residual) row["mean_reconstruction_residual"] = *r.mean_reconstruction_residual;
    out.push_back(row);
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph coarsening with connection entropy, SVDPool and edge-feature attention"};
  app.require_subcommand(1);
  Format fmt = Format::json;
  app.add_option("--format", fmt, "Output format: json or csv")
      ->transform(CLI::CheckedTransformer(std::map<std::string, Format>{{"json", Format::json}, {"csv", Format::csv}}))
      ->capture_default_str();

  DatasetOptions data;
  ConfigOptions conf;

  auto* inspect = app.add_subcommand("inspect", "Dataset statistics, or one graph's coarsening with --graph");
  std::optional<int> graph_index;
  inspect->add_option("--graph", graph_index, "Graph index to coarsen and describe");

  auto* verify = app.add_subcommand("verify", "Check SVDPool reconstruction residuals; nonzero exit on failure");
  bool full_rank = false;
  double tolerance = 1e-8;
  verify->add_flag("--full-rank", full_rank, "Use every component of every block");
  verify->add_option("--tolerance", tolerance, "Largest accepted residual")->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "Train the classifier and report per-epoch metrics");
  int folds = 0;
  std::string save;
  train_cmd->add_option("--cv", folds, "Run k-fold cross-validation instead of a single split");
  train_cmd->add_option("--save", save, "Write parameters to <stem>.json and <stem>.bin");

  auto* ablate_cmd = app.add_subcommand("ablate", "Train every stage combination and print the table");

  for (auto* sub : {inspect, verify, train_cmd, ablate_cmd}) {
    add_dataset_options(sub, data);
    add_config_options(sub, conf);
  }

  CLI11_PARSE(app, argc, argv);
  try {
    if (*inspect) return cmd_inspect(data, conf, graph_index, fmt);
    if (*verify) return cmd_verify(data, conf, full_rank, tolerance, fmt);
    if (*train_cmd) return cmd_train(data, conf, folds, save, fmt);
    return cmd_ablate(data, conf, fmt);
  } catch (const std::exception& e) {
    std::cerr << "icepool: " << e.what() << '\n';
    return 2;
  }
}
