#pragma once

// Single-head attention over a coarsened graph with edge features.
//
//   gat:  s_ij = LeakyReLU(a^T [W h_i | W h_j | W_e E_ij])   alpha = masked row softmax(s)
//   egat: s_ijp = max(0, LeakyReLU(a^T [W h_i | W h_j]) * E_ijp)   alpha_p = DS(s_p)
//
// Row-vector convention: node features are rows, so "W h_i" is row i of H W.
// The egat output averages the per-channel aggregates.

#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "graph.hpp"
#include "random.hpp"
#include "tensor.hpp"

namespace icepool {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class AttentionVariant { gat, egat };

inline std::string_view to_string(AttentionVariant v) { return v == AttentionVariant::gat ? "gat" : "egat"; }

inline AttentionVariant parse_attention_variant(std::string_view s) {
  if (s == "gat") return AttentionVariant::gat;
  if (s == "egat") return AttentionVariant::egat;
  throw ArgumentError("unknown attention variant '" + std::string(s) + "'");
}

struct CegatParams {
  AttentionVariant variant = AttentionVariant::gat;
  Matrix w;    // d_in x d_out
  Vector a;    // 2 d_out + d_edge (gat) or 2 d_out (egat)
  Matrix w_e;  // edge channels x d_edge, gat only
  double leaky_slope = 0.2;

  Eigen::Index d_in() const { return w.rows(); }
  Eigen::Index d_out() const { return w.cols(); }
  Eigen::Index d_edge() const { return w_e.cols(); }
};

struct CegatShape {
  AttentionVariant variant = AttentionVariant::gat;
  Eigen::Index d_in = 0;
  Eigen::Index d_out = 0;
  Eigen::Index edge_channels = 3;
  Eigen::Index d_edge = 4;
  double leaky_slope = 0.2;
};

// Uniform in [-s, s] with s = 1 / sqrt(fan_in).
inline Matrix uniform_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(fan_in, 1)));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-s, s);
  return m;
}

inline CegatParams init_cegat(const CegatShape& shape, Rng& rng) {
  CegatParams p;
  p.variant = shape.variant;
  p.leaky_slope = shape.leaky_slope;
  p.w = uniform_init(shape.d_in, shape.d_out, shape.d_in, rng);
  if (shape.variant == AttentionVariant::gat) {
    p.w_e = uniform_init(shape.edge_channels, shape.d_edge, shape.edge_channels, rng);
    const Eigen::Index len = 2 * shape.d_out + shape.d_edge;
    p.a = uniform_init(len, 1, len, rng);
  } else {
    p.w_e = Matrix(shape.edge_channels, 0);
    const Eigen::Index len = 2 * shape.d_out;
    p.a = uniform_init(len, 1, len, rng);
  }
  return p;
}

// Coarse graph fed to the layer. The mask restricts attention to edges of
// the coarsened graph plus self-edges.
struct CoarseGraphInput {
  Matrix h;       // K x d_in
  EdgeTensor e;   // K x K x channels
  Mask mask;      // K x K, symmetric, diagonal true
};

// Support of A_coar plus the diagonal.
inline Mask attention_mask(const Matrix& a_coar) {
  Mask m = a_coar.array() > 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, i) = true;
  return m;
}

inline void check_input(const CoarseGraphInput& inp, const CegatParams& p) {
  const Eigen::Index k = inp.h.rows();
  if (inp.mask.rows() != k || inp.mask.cols() != k) throw ArgumentError("cegat: mask is not K x K");
  if (inp.e.k() != k) throw ArgumentError("cegat: edge tensor is not K x K");
  if (inp.h.cols() != p.d_in()) throw ArgumentError("cegat: feature dim differs from W rows");
  for (Eigen::Index i = 0; i < k; ++i)
    if (!inp.mask(i, i)) throw ArgumentError("cegat: mask diagonal must be true");
  if (p.variant == AttentionVariant::gat) {
    if (static_cast<Eigen::Index>(inp.e.depth()) != p.w_e.rows())
      throw ArgumentError("cegat: edge channels differ from W_e rows");
    if (p.a.size() != 2 * p.d_out() + p.d_edge()) throw ArgumentError("cegat: attention vector length");
  } else if (p.a.size() != 2 * p.d_out()) {
    throw ArgumentError("cegat: attention vector length");
  }
}

enum class EdgeNormalization { none, standardize, scale };

// Per-channel normalization over masked entries. `standardize` maps to zero
// mean and unit variance; `scale` divides by the root mean square and keeps
// signs, so nonnegative features stay nonnegative.
inline EdgeTensor normalize_edge_features(const EdgeTensor& e, const Mask& mask, EdgeNormalization mode) {
  if (mode == EdgeNormalization::none) return e;
  EdgeTensor out = e;
  const double count = static_cast<double>(mask.count());
  if (count == 0.0) return out;
  for (auto& ch : out.channels) {
    const double mean = mask.select(ch.array(), 0.0).sum() / count;
    const double sq = mask.select(ch.array().square(), 0.0).sum() / count;
    if (mode == EdgeNormalization::standardize) {
      const double var = std::max(sq - mean * mean, 0.0);
      const double sd = std::sqrt(var);
      ch = mask.select((ch.array() - mean) / (sd > 1e-12 ? sd : 1.0), 0.0).matrix();
    } else {
      const double rms = std::sqrt(sq);
      ch = mask.select(ch.array() / (rms > 1e-12 ? rms : 1.0), 0.0).matrix();
    }
  }
  return out;
}

// Doubly stochastic normalization of a nonnegative matrix:
//   F_ik = E_ik / sum_k E_ik,   DS_ij = sum_k F_ik F_jk / sum_v F_vk.
// All-zero rows and columns are skipped.
inline Matrix doubly_stochastic(const Matrix& e) {
  if ((e.array() < 0.0).any()) throw ArgumentError("doubly_stochastic: negative entry");
  const Vector row = e.rowwise().sum();
  Matrix f = Matrix::Zero(e.rows(), e.cols());
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    if (row(i) > 0.0) f.row(i) = e.row(i) / row(i);
  const Vector col = f.colwise().sum().transpose();
  Vector inv_col = Vector::Zero(col.size());
  for (Eigen::Index k = 0; k < col.size(); ++k)
    if (col(k) > 0.0) inv_col(k) = 1.0 / col(k);
  return f * inv_col.asDiagonal() * f.transpose();
}

namespace detail {

inline double leaky(double x, double slope) { return x > 0.0 ? x : slope * x; }
inline double leaky_grad(double x, double slope) { return x > 0.0 ? 1.0 : slope; }

// Gradient of doubly_stochastic with respect to its input.
inline Matrix doubly_stochastic_backward(const Matrix& e, const Matrix& upstream) {
  const Eigen::Index k = e.rows();
  const Vector row = e.rowwise().sum();
  Matrix f = Matrix::Zero(k, e.cols());
  for (Eigen::Index i = 0; i < k; ++i)
    if (row(i) > 0.0) f.row(i) = e.row(i) / row(i);
  const Vector col = f.colwise().sum().transpose();
  Vector inv_col = Vector::Zero(col.size());
  for (Eigen::Index c = 0; c < col.size(); ++c)
    if (col(c) > 0.0) inv_col(c) = 1.0 / col(c);

  const Matrix sym = upstream + upstream.transpose();
  Matrix df = (sym * f) * inv_col.asDiagonal();
  const Matrix quad = f.transpose() * upstream * f;
  for (Eigen::Index c = 0; c < col.size(); ++c) df.col(c).array() -= quad(c, c) * inv_col(c) * inv_col(c);
  for (Eigen::Index c = 0; c < col.size(); ++c)
    if (col(c) == 0.0) df.col(c).setZero();

  Matrix de = Matrix::Zero(k, e.cols());
  for (Eigen::Index i = 0; i < k; ++i) {
    if (row(i) == 0.0) continue;
    const double centre = df.row(i).dot(f.row(i));
    de.row(i) = (df.row(i).array() - centre).matrix() / row(i);
  }
  return de;
}

struct GatCache {
  Matrix z;          // K x d_out
  Matrix score;      // pre-activation s_ij
  Matrix attention;  // alpha
  Matrix projected;  // (K*K) x d_edge rows E_ij W_e, row index i*K + j
};

inline GatCache gat_cache(const CoarseGraphInput& inp, const CegatParams& p) {
  check_input(inp, p);
  const Eigen::Index k = inp.h.rows();
  const Eigen::Index d = p.d_out();
  GatCache c;
  c.z = inp.h * p.w;
  const Vector f = c.z * p.a.segment(0, d);
  const Vector g = c.z * p.a.segment(d, d);
  const Vector a3 = p.a.segment(2 * d, p.d_edge());
  c.projected = Matrix::Zero(k * k, p.d_edge());
  c.score = Matrix::Zero(k, k);
  c.attention = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!inp.mask(i, j)) continue;
      c.projected.row(i * k + j) = inp.e.fiber(i, j) * p.w_e;
      c.score(i, j) = f(i) + g(j) + c.projected.row(i * k + j).dot(a3);
      peak = std::max(peak, leaky(c.score(i, j), p.leaky_slope));
    }
    double total = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!inp.mask(i, j)) continue;
      c.attention(i, j) = std::exp(leaky(c.score(i, j), p.leaky_slope) - peak);
      total += c.attention(i, j);
    }
    c.attention.row(i) /= total;
  }
  return c;
}

struct EgatCache {
  Matrix z;
  Matrix score;                   // pre-activation a^T [z_i | z_j]
  std::vector<Matrix> raw;        // LeakyReLU(score) * E_p on the mask
  std::vector<Matrix> attention;  // DS(max(raw, 0)) per channel
};

inline EgatCache egat_cache(const CoarseGraphInput& inp, const CegatParams& p) {
  check_input(inp, p);
  const Eigen::Index k = inp.h.rows();
  const Eigen::Index d = p.d_out();
  EgatCache c;
  c.z = inp.h * p.w;
  const Vector f = c.z * p.a.segment(0, d);
  const Vector g = c.z * p.a.segment(d, d);
  c.score = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      if (inp.mask(i, j)) c.score(i, j) = f(i) + g(j);
  for (std::size_t ch = 0; ch < inp.e.depth(); ++ch) {
    Matrix raw = Matrix::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j)
        if (inp.mask(i, j)) raw(i, j) = leaky(c.score(i, j), p.leaky_slope) * inp.e(i, j, ch);
    c.attention.push_back(doubly_stochastic(raw.cwiseMax(0.0)));
    c.raw.push_back(std::move(raw));
  }
  return c;
}

}  // namespace detail

// Row-stochastic attention of the gat variant (zero off the mask).
inline Matrix gat_attention(const CoarseGraphInput& inp, const CegatParams& p) {
  return detail::gat_cache(inp, p).attention;
}

// Per-channel doubly stochastic attention of the egat variant.
inline std::vector<Matrix> egat_attention(const CoarseGraphInput& inp, const CegatParams& p) {
  return detail::egat_cache(inp, p).attention;
}

inline Matrix gat_forward(const CoarseGraphInput& inp, const CegatParams& p) {
  const auto c = detail::gat_cache(inp, p);
  return c.attention * c.z;
}

inline Matrix egat_forward(const CoarseGraphInput& inp, const CegatParams& p) {
  const auto c = detail::egat_cache(inp, p);
  Matrix out = Matrix::Zero(inp.h.rows(), p.d_out());
  if (c.attention.empty()) return out;
  for (const auto& alpha : c.attention) out += alpha * c.z;
  return out / static_cast<double>(c.attention.size());
}

inline Matrix cegat_forward(const CoarseGraphInput& inp, const CegatParams& p) {
  return p.variant == AttentionVariant::gat ? gat_forward(inp, p) : egat_forward(inp, p);
}

struct CegatGradients {
  Matrix w;
  Vector a;
  Matrix w_e;
  Matrix h;
  EdgeTensor e;
};

namespace detail {

// Shared tail: gradients flowing into z from the attention score
// s_ij = f_i + g_j (+ edge term), given d(loss)/d(s).
inline void score_backward(const Matrix& dscore, const Matrix& z, const CegatParams& p, Matrix& dz,
                           Vector& da) {
  const Eigen::Index d = p.d_out();
  const Vector df = dscore.rowwise().sum();
  const Vector dg = dscore.colwise().sum().transpose();
  da.segment(0, d) = z.transpose() * df;
  da.segment(d, d) = z.transpose() * dg;
  dz += df * p.a.segment(0, d).transpose() + dg * p.a.segment(d, d).transpose();
}

inline CegatGradients gat_backward(const CoarseGraphInput& inp, const CegatParams& p, const Matrix& upstream) {
  const auto c = gat_cache(inp, p);
  const Eigen::Index k = inp.h.rows();
  const Eigen::Index d = p.d_out();
  const Vector a3 = p.a.segment(2 * d, p.d_edge());

  CegatGradients gr;
  gr.a = Vector::Zero(p.a.size());
  gr.w_e = Matrix::Zero(p.w_e.rows(), p.w_e.cols());
  gr.e = EdgeTensor(k, inp.e.depth());

  const Matrix dalpha = upstream * c.z.transpose();
  Matrix dz = c.attention.transpose() * upstream;
  Matrix dscore = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double centre = c.attention.row(i).dot(dalpha.row(i));
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!inp.mask(i, j)) continue;
      const double dt = c.attention(i, j) * (dalpha(i, j) - centre);
      dscore(i, j) = dt * leaky_grad(c.score(i, j), p.leaky_slope);
    }
  }
  score_backward(dscore, c.z, p, dz, gr.a);

  const Vector we_a3 = p.w_e * a3;  // d(score)/d(E_ij) per channel
  Vector da3 = Vector::Zero(p.d_edge());
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      const double ds = dscore(i, j);
      if (!inp.mask(i, j) || ds == 0.0) continue;
      da3 += ds * c.projected.row(i * k + j).transpose();
      gr.w_e += ds * inp.e.fiber(i, j).transpose() * a3.transpose();
      for (std::size_t ch = 0; ch < inp.e.depth(); ++ch)
        gr.e(i, j, ch) = ds * we_a3(static_cast<Eigen::Index>(ch));
    }
  gr.a.segment(2 * d, p.d_edge()) = da3;
  gr.w = inp.h.transpose() * dz;
  gr.h = dz * p.w.transpose();
  return gr;
}

inline CegatGradients egat_backward(const CoarseGraphInput& inp, const CegatParams& p, const Matrix& upstream) {
  const auto c = egat_cache(inp, p);
  const Eigen::Index k = inp.h.rows();
  const double channels = static_cast<double>(inp.e.depth());

  CegatGradients gr;
  gr.a = Vector::Zero(p.a.size());
  gr.w_e = Matrix::Zero(p.w_e.rows(), p.w_e.cols());
  gr.e = EdgeTensor(k, inp.e.depth());

  Matrix dz = Matrix::Zero(k, p.d_out());
  Matrix dscore = Matrix::Zero(k, k);
  if (inp.e.depth() > 0) {
    const Matrix dalpha = upstream * c.z.transpose() / channels;
    Matrix dactivated = Matrix::Zero(k, k);  // d(loss)/d(LeakyReLU(score))
    for (std::size_t ch = 0; ch < inp.e.depth(); ++ch) {
      dz += c.attention[ch].transpose() * upstream / channels;
      const Matrix& raw = c.raw[ch];
      const Matrix draw = doubly_stochastic_backward(raw.cwiseMax(0.0), dalpha);
      for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) {
          if (!inp.mask(i, j) || raw(i, j) <= 0.0) continue;
          dactivated(i, j) += draw(i, j) * inp.e(i, j, ch);
          gr.e(i, j, ch) = draw(i, j) * leaky(c.score(i, j), p.leaky_slope);
        }
    }
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j)
        if (inp.mask(i, j)) dscore(i, j) = dactivated(i, j) * leaky_grad(c.score(i, j), p.leaky_slope);
  }
  score_backward(dscore, c.z, p, dz, gr.a);
  gr.w = inp.h.transpose() * dz;
  gr.h = dz * p.w.transpose();
  return gr;
}

}  // namespace detail

// Reverse-mode gradients of sum(upstream .* forward(inp, p)) with respect to
// every parameter tensor, the node features and the edge features.
inline CegatGradients cegat_backward(const CoarseGraphInput& inp, const CegatParams& p, const Matrix& upstream) {
  if (upstream.rows() != inp.h.rows() || upstream.cols() != p.d_out())
    throw ArgumentError("cegat_backward: upstream gradient shape");
  return p.variant == AttentionVariant::gat ? detail::gat_backward(inp, p, upstream)
                                            : detail::egat_backward(inp, p, upstream);
}

}  // namespace icepool
