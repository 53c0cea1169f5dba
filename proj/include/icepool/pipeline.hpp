#pragma once

// End-to-end model: partition -> coarsen -> connection entropy -> SVDPool
// (parallel branch) -> one attention layer -> mean readout -> linear head.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cegat.hpp"
#include "coarsen.hpp"
#include "entropy.hpp"
#include "error.hpp"
#include "graph.hpp"
#include "partition.hpp"
#include "random.hpp"
#include "svdpool.hpp"

namespace icepool {

enum class Combine { concat, sum };

inline std::string_view to_string(Combine c) { return c == Combine::concat ? "concat" : "sum"; }

inline Combine parse_combine(std::string_view s) {
  if (s == "concat") return Combine::concat;
  if (s == "sum") return Combine::sum;
  throw ArgumentError("unknown combine mode '" + std::string(s) + "'");
}

struct IceConfig {
  int target_k = 4;  // clamped to the node count of smaller graphs
  int rank = 2;
  int radius = 1;
  AttentionVariant variant = AttentionVariant::gat;
  bool use_svdpool = true;
  bool use_cegat = true;
  Combine combine = Combine::concat;
  bool weight_by_sqrt_sigma = true;
  bool normalize_edges = true;  // standardize (gat) or RMS-scale (egat) per graph
  std::uint64_t seed = 0;
  int epochs = 200;
  double learning_rate = 0.2;
  int d_hidden = 16;
  int d_edge = 4;
  double leaky_slope = 0.2;
  double validation_fraction = 0.2;
  int threads = 0;  // 0: ICEPOOL_THREADS or hardware concurrency
};

inline void check_config(const IceConfig& cfg) {
  if (cfg.target_k < 1) throw ConfigError("target_k must be >= 1");
  if (cfg.rank < 1) throw ConfigError("rank must be >= 1");
  if (cfg.radius < 1) throw ConfigError("radius must be >= 1");
  if (cfg.d_hidden < 1 || cfg.d_edge < 1) throw ConfigError("layer widths must be >= 1");
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(cfg.leaky_slope > 0.0 && cfg.leaky_slope < 1.0)) throw ConfigError("leaky_slope must lie in (0, 1)");
  if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0))
    throw ConfigError("validation_fraction must lie in [0, 1)");
}

// Worker count for per-graph preprocessing.
inline int preprocessing_threads(int requested = 0) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("ICEPOOL_THREADS")) n = std::atoi(env);
  }
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return n;
}

// Everything that depends only on (graph, config) and is computed once.
struct PreparedGraph {
  Partition partition;
  CoarseningResult coarsening;
  EntropyFeatures entropy;
  std::optional<SvdPoolComponents> svdpool;
  std::optional<ReconstructionReport> reconstruction;
  std::map<std::string, double> timings_ms;
};

namespace detail {

template <typename F>
double timed(std::map<std::string, double>& sink, const std::string& stage, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  body();
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  sink[stage] += ms;
  return ms;
}

}  // namespace detail

inline PreparedGraph prepare(const Graph& g, const IceConfig& cfg) {
  check_config(cfg);
  if (g.n < 1) throw ArgumentError("prepare: graph '" + g.name + "' has no nodes");
  PreparedGraph prep;
  auto& t = prep.timings_ms;
  detail::timed(t, "partition", [&] { prep.partition = heavy_edge_partition(g, std::min(cfg.target_k, g.n), cfg.seed); });
  detail::timed(t, "coarsen", [&] { prep.coarsening = coarsen(g, prep.partition); });
  detail::timed(t, "entropy", [&] { prep.entropy = connection_entropy(prep.coarsening); });
  if (cfg.use_svdpool) {
    detail::timed(t, "svdpool", [&] {
      prep.svdpool = build_components(g, prep.partition, prep.coarsening,
                                      SvdPoolOptions{cfg.rank, cfg.radius, cfg.weight_by_sqrt_sigma});
    });
    detail::timed(t, "verify", [&] { prep.reconstruction = verify_reconstruction(g, prep.partition, *prep.svdpool); });
  }
  return prep;
}

// Prepares every graph, in parallel up to preprocessing_threads(cfg.threads).
// Output order matches the dataset.
inline std::vector<PreparedGraph> prepare_dataset(const Dataset& ds, const IceConfig& cfg) {
  std::vector<PreparedGraph> out(ds.size());
  const int workers = std::min<int>(preprocessing_threads(cfg.threads), static_cast<int>(std::max<std::size_t>(ds.size(), 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < ds.size(); i = next++) {
      try {
        out[i] = prepare(ds.graphs[i], cfg);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

// Coarse node features: X_coar, optionally joined with the SVDPool signals.
inline Matrix coarse_features(const PreparedGraph& prep, const IceConfig& cfg) {
  const Matrix& x = prep.coarsening.x_coar;
  if (!cfg.use_svdpool || !prep.svdpool) return x;
  const auto& pooled = prep.svdpool->pooled;
  if (cfg.combine == Combine::sum) {
    Matrix out = x;
    for (const auto& y : pooled) {
      if (y.rows() != x.rows() || y.cols() != x.cols())
        throw ConfigError("combine=sum needs SVDPool signals shaped like X_coar");
      out += y;
    }
    return out;
  }
  Matrix out(x.rows(), x.cols() * static_cast<Eigen::Index>(1 + pooled.size()));
  out.leftCols(x.cols()) = x;
  for (std::size_t l = 0; l < pooled.size(); ++l)
    out.middleCols(x.cols() * static_cast<Eigen::Index>(l + 1), x.cols()) = pooled[l];
  return out;
}

inline Eigen::Index coarse_feature_dim(int feature_dim, const IceConfig& cfg) {
  if (!cfg.use_svdpool || cfg.combine == Combine::sum) return feature_dim;
  return static_cast<Eigen::Index>(feature_dim) * (1 + cfg.rank);
}

inline CoarseGraphInput attention_input(const PreparedGraph& prep, const IceConfig& cfg) {
  CoarseGraphInput inp;
  inp.h = coarse_features(prep, cfg);
  inp.mask = attention_mask(prep.coarsening.a_coar);
  const auto mode = !cfg.normalize_edges                 ? EdgeNormalization::none
                    : cfg.variant == AttentionVariant::gat ? EdgeNormalization::standardize
                                                           : EdgeNormalization::scale;
  inp.e = normalize_edge_features(prep.entropy.edge_features, inp.mask, mode);
  return inp;
}

struct IceParams {
  std::optional<CegatParams> cegat;
  Matrix classifier;  // embedding dim x classes
  Vector bias;        // classes
};

inline IceParams init_params(const IceConfig& cfg, int feature_dim, int num_classes) {
  check_config(cfg);
  Rng rng(cfg.seed);
  IceParams p;
  Eigen::Index embedding = coarse_feature_dim(feature_dim, cfg);
  if (cfg.use_cegat) {
    p.cegat = init_cegat({cfg.variant, embedding, cfg.d_hidden, 3, cfg.d_edge, cfg.leaky_slope}, rng);
    embedding = cfg.d_hidden;
  }
  p.classifier = uniform_init(embedding, num_classes, embedding, rng);
  p.bias = Vector::Zero(num_classes);
  return p;
}

struct IceDiagnostics {
  Matrix entropy;
  std::optional<double> reconstruction_residual;
  std::map<std::string, double> timings_ms;
};

struct IceOutput {
  Vector embedding;
  Vector logits;
  IceDiagnostics diagnostics;
};

namespace detail {

struct ForwardState {
  CoarseGraphInput input;
  Matrix node_out;  // K x embedding
  Vector embedding;
  Vector logits;
};

inline ForwardState forward(const PreparedGraph& prep, const IceConfig& cfg, const IceParams& params) {
  ForwardState s;
  if (cfg.use_cegat) {
    if (!params.cegat) throw ConfigError("use_cegat is on but parameters carry no attention layer");
    s.input = attention_input(prep, cfg);
    s.node_out = cegat_forward(s.input, *params.cegat);
  } else {
    s.node_out = coarse_features(prep, cfg);
  }
  if (s.node_out.cols() != params.classifier.rows())
    throw ConfigError("embedding width " + std::to_string(s.node_out.cols()) + " does not match classifier rows " +
                      std::to_string(params.classifier.rows()));
  s.embedding = s.node_out.colwise().mean().transpose();
  s.logits = params.classifier.transpose() * s.embedding + params.bias;
  return s;
}

inline Vector softmax(const Vector& logits) {
  const Vector e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

}  // namespace detail

inline IceOutput run_ice(const PreparedGraph& prep, const IceConfig& cfg, const IceParams& params) {
  IceOutput out;
  out.diagnostics.timings_ms = prep.timings_ms;
  detail::ForwardState s;
  detail::timed(out.diagnostics.timings_ms, "forward", [&] { s = detail::forward(prep, cfg, params); });
  out.embedding = std::move(s.embedding);
  out.logits = std::move(s.logits);
  out.diagnostics.entropy = prep.entropy.h;
  if (prep.reconstruction) out.diagnostics.reconstruction_residual = prep.reconstruction->residual;
  return out;
}

inline IceOutput run_ice(const Graph& g, const IceConfig& cfg, const IceParams& params) {
  return run_ice(prepare(g, cfg), cfg, params);
}

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;  // NaN when there is no validation split
};

struct TrainResult {
  IceParams params;
  std::vector<EpochMetrics> history;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> validation_indices;
};

// Seeded shuffle split; the validation share is rounded down.
inline void split_indices(std::size_t count, double validation_fraction, std::uint64_t seed,
                          std::vector<std::size_t>& train, std::vector<std::size_t>& validation) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  rng.shuffle(order);
  const auto held_out = static_cast<std::size_t>(validation_fraction * static_cast<double>(count));
  validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held_out));
  train.assign(order.begin() + static_cast<std::ptrdiff_t>(held_out), order.end());
}

inline double accuracy(const std::vector<PreparedGraph>& prepared, const Dataset& ds,
                       const std::vector<std::size_t>& indices, const IceConfig& cfg, const IceParams& params) {
  if (indices.empty()) return std::nan("");
  std::size_t correct = 0;
  for (std::size_t i : indices) {
    Eigen::Index predicted = 0;
    detail::forward(prepared[i], cfg, params).logits.maxCoeff(&predicted);
    correct += predicted == ds.graphs[i].label;
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

// Full-batch gradient descent on mean softmax cross-entropy over the
// given training indices. Metrics for epoch e are measured before its update.
inline TrainResult train_on(const Dataset& ds, const std::vector<PreparedGraph>& prepared, const IceConfig& cfg,
                            std::vector<std::size_t> train_idx, std::vector<std::size_t> validation_idx) {
  if (ds.empty() || train_idx.empty()) throw ArgumentError("train: dataset is empty");
  TrainResult result;
  result.params = init_params(cfg, ds.feature_dim, ds.num_classes);
  result.train_indices = std::move(train_idx);
  result.validation_indices = std::move(validation_idx);
  IceParams& params = result.params;
  const double scale = 1.0 / static_cast<double>(result.train_indices.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Matrix d_classifier = Matrix::Zero(params.classifier.rows(), params.classifier.cols());
    Vector d_bias = Vector::Zero(params.bias.size());
    CegatGradients d_cegat;
    if (params.cegat) {
      d_cegat.w = Matrix::Zero(params.cegat->w.rows(), params.cegat->w.cols());
      d_cegat.a = Vector::Zero(params.cegat->a.size());
      d_cegat.w_e = Matrix::Zero(params.cegat->w_e.rows(), params.cegat->w_e.cols());
    }
    double loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t i : result.train_indices) {
      const auto s = detail::forward(prepared[i], cfg, params);
      const Vector prob = detail::softmax(s.logits);
      const int label = ds.graphs[i].label;
      loss -= std::log(std::max(prob(label), 1e-300)) * scale;
      Eigen::Index predicted = 0;
      s.logits.maxCoeff(&predicted);
      correct += predicted == label;

      Vector d_logits = prob * scale;
      d_logits(label) -= scale;
      d_classifier += s.embedding * d_logits.transpose();
      d_bias += d_logits;
      if (params.cegat) {
        const Vector d_embedding = params.classifier * d_logits;
        const Matrix upstream =
            Matrix::Ones(s.node_out.rows(), 1) * d_embedding.transpose() / static_cast<double>(s.node_out.rows());
        const auto g = cegat_backward(s.input, *params.cegat, upstream);
        d_cegat.w += g.w;
        d_cegat.a += g.a;
        d_cegat.w_e += g.w_e;
      }
    }
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "training aborted: non-finite loss at epoch " << epoch << " (learning_rate " << cfg.learning_rate << ")";
      throw NumericError(msg.str());
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.loss = loss;
    m.train_accuracy = static_cast<double>(correct) / static_cast<double>(result.train_indices.size());
    m.validation_accuracy = accuracy(prepared, ds, result.validation_indices, cfg, params);
    result.history.push_back(m);

    params.classifier -= cfg.learning_rate * d_classifier;
    params.bias -= cfg.learning_rate * d_bias;
    if (params.cegat) {
      params.cegat->w -= cfg.learning_rate * d_cegat.w;
      params.cegat->a -= cfg.learning_rate * d_cegat.a;
      params.cegat->w_e -= cfg.learning_rate * d_cegat.w_e;
    }
  }
  return result;
}

inline TrainResult train(const Dataset& ds, const std::vector<PreparedGraph>& prepared, const IceConfig& cfg) {
  std::vector<std::size_t> train_idx, validation_idx;
  split_indices(ds.size(), cfg.validation_fraction, cfg.seed, train_idx, validation_idx);
  return train_on(ds, prepared, cfg, std::move(train_idx), std::move(validation_idx));
}

inline TrainResult train(const Dataset& ds, const IceConfig& cfg) {
  if (ds.empty()) throw ArgumentError("train: dataset is empty");
  return train(ds, prepare_dataset(ds, cfg), cfg);
}

// Final-epoch accuracies of a training run (re-evaluated after the last update).
struct FinalAccuracy {
  double train = 0.0;
  double validation = 0.0;
};

inline FinalAccuracy final_accuracy(const Dataset& ds, const std::vector<PreparedGraph>& prepared,
                                    const IceConfig& cfg, const TrainResult& r) {
  return {accuracy(prepared, ds, r.train_indices, cfg, r.params),
          accuracy(prepared, ds, r.validation_indices, cfg, r.params)};
}

// k-fold cross-validation; fold f tests on shuffled positions congruent to f.
inline std::vector<double> cross_validate(const Dataset& ds, const IceConfig& cfg, int folds = 10) {
  if (folds < 2 || static_cast<std::size_t>(folds) > ds.size())
    throw ArgumentError("cross_validate: folds must lie in [2, dataset size]");
  const auto prepared = prepare_dataset(ds, cfg);
  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(cfg.seed ^ 0x51ed270b27a3f1c9ULL);
  rng.shuffle(order);
  std::vector<double> scores;
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < order.size(); ++i)
      (static_cast<int>(i % static_cast<std::size_t>(folds)) == f ? test_idx : train_idx).push_back(order[i]);
    const auto r = train_on(ds, prepared, cfg, train_idx, test_idx);
    scores.push_back(accuracy(prepared, ds, test_idx, cfg, r.params));
  }
  return scores;
}

struct AblationRow {
  std::string name;
  IceConfig config;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
  std::optional<double> mean_reconstruction_residual;
};

// Stage combinations, in table order.
inline std::vector<std::pair<std::string, IceConfig>> ablation_configs(const IceConfig& base) {
  auto with = [&](bool cegat, AttentionVariant variant, bool svd) {
    IceConfig c = base;
    c.use_cegat = cegat;
    c.variant = variant;
    c.use_svdpool = svd;
    return c;
  };
  using V = AttentionVariant;
  return {{"Base", with(false, base.variant, false)},
          {"+CEGAT (GAT)", with(true, V::gat, false)},
          {"+CEGAT (EGAT)", with(true, V::egat, false)},
          {"+SVDPool", with(false, base.variant, true)},
          {"+Both (GAT)", with(true, V::gat, true)},
          {"+Both (EGAT)", with(true, V::egat, true)}};
}

inline std::vector<AblationRow> ablate(const Dataset& ds, const IceConfig& base) {
  if (ds.empty()) throw ArgumentError("ablate: dataset is empty");
  std::vector<AblationRow> rows;
  for (const auto& [name, cfg] : ablation_configs(base)) {
    const auto prepared = prepare_dataset(ds, cfg);
    const auto result = train(ds, prepared, cfg);
    const auto acc = final_accuracy(ds, prepared, cfg, result);
    AblationRow row{name, cfg, acc.train, acc.validation, std::nullopt};
    if (cfg.use_svdpool) {
      double total = 0.0;
      for (const auto& p : prepared) total += p.reconstruction ? p.reconstruction->residual : 0.0;
      row.mean_reconstruction_residual = total / static_cast<double>(prepared.size());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "configuration,use_cegat,variant,use_svdpool,train_accuracy,validation_accuracy,mean_reconstruction_residual\n";
  for (const auto& r : rows) {
    out << '"' << r.name << "\"," << (r.config.use_cegat ? 1 : 0) << ','
        << (r.config.use_cegat ? to_string(r.config.variant) : "none") << ',' << (r.config.use_svdpool ? 1 : 0)
        << ',' << r.train_accuracy << ',' << r.validation_accuracy << ',';
    if (r.mean_reconstruction_residual) out << *r.mean_reconstruction_residual;
    out << '\n';
  }
  return out.str();
}

}  // namespace icepool
