#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "error.hpp"
#include "graph.hpp"

namespace icepool {

// Thin SVD m = u * diag(sigma) * v^T with min(rows, cols) components.
struct SvdTriplet {
  Matrix u;      // rows x p, orthonormal columns
  Vector sigma;  // p, descending, nonnegative
  Matrix v;      // cols x p, orthonormal columns

  Eigen::Index components() const { return sigma.size(); }

  // Sum of the leading `rank` rank-one terms.
  Matrix reconstruct(Eigen::Index rank) const {
    rank = std::clamp<Eigen::Index>(rank, 0, components());
    return u.leftCols(rank) * sigma.head(rank).asDiagonal() * v.leftCols(rank).transpose();
  }
  Matrix reconstruct() const { return reconstruct(components()); }
};

namespace detail {

// Hestenes one-sided Jacobi on the columns of `a` (rows >= cols). On return
// the columns of `a` are mutually orthogonal and `v` holds the accumulated
// rotations, so that a_in = a_out * v^T.
inline void one_sided_jacobi(Matrix& a, Matrix& v) {
  const Eigen::Index cols = a.cols();
  v = Matrix::Identity(cols, cols);
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  constexpr int kMaxSweeps = 80;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < cols; ++p) {
      for (Eigen::Index q = p + 1; q < cols; ++q) {
        const double alpha = a.col(p).squaredNorm();
        const double beta = a.col(q).squaredNorm();
        const double gamma = a.col(p).dot(a.col(q));
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= kEps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Matrix* m : {&a, &v}) {
          const Vector cp = m->col(p);
          const Vector cq = m->col(q);
          m->col(p) = c * cp - s * cq;
          m->col(q) = s * cp + c * cq;
        }
      }
    }
    if (!rotated) return;
  }
}

// Orthonormalizes `col` against the first `count` columns of `basis`;
// returns false when the residual vanishes.
inline bool orthonormalize(Vector& col, const Matrix& basis, Eigen::Index count) {
  for (int pass = 0; pass < 2; ++pass)
    for (Eigen::Index j = 0; j < count; ++j) col -= basis.col(j).dot(col) * basis.col(j);
  const double norm = col.norm();
  if (norm < 1e-8) return false;
  col /= norm;
  return true;
}

// SVD for rows >= cols.
inline SvdTriplet tall_svd(const Matrix& m, double tol) {
  Matrix a = m;
  Matrix rot;
  one_sided_jacobi(a, rot);
  const Eigen::Index rows = a.rows();
  const Eigen::Index p = a.cols();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  Vector norms(p);
  for (Eigen::Index l = 0; l < p; ++l) norms(l) = a.col(l).norm();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return norms(x) > norms(y); });

  SvdTriplet out;
  out.sigma.resize(p);
  out.u = Matrix::Zero(rows, p);
  out.v.resize(m.cols(), p);
  const double threshold = tol * (p > 0 ? norms.maxCoeff() : 0.0);
  Eigen::Index next_basis = 0;  // next standard basis vector to try for completion
  for (Eigen::Index l = 0; l < p; ++l) {
    const Eigen::Index src = order[static_cast<std::size_t>(l)];
    out.sigma(l) = norms(src);
    out.v.col(l) = rot.col(src);
    Vector col;
    bool ok = false;
    if (norms(src) > threshold && norms(src) > 0.0) {
      col = a.col(src) / norms(src);
      ok = orthonormalize(col, out.u, l);
    }
    while (!ok && next_basis < rows) {
      col = Vector::Unit(rows, next_basis++);
      ok = orthonormalize(col, out.u, l);
    }
    out.u.col(l) = col;
  }
  return out;
}

}  // namespace detail

// Flips each (u_l, v_l) pair so the largest-magnitude entry of u_l is
// positive; near-equal magnitudes resolve to the lowest index.
inline void canonicalize_signs(SvdTriplet& t) {
  for (Eigen::Index l = 0; l < t.u.cols(); ++l) {
    const double peak = t.u.col(l).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < t.u.rows(); ++i) {
      if (std::abs(t.u(i, l)) >= peak - 1e-12) {
        if (t.u(i, l) < 0.0) {
          t.u.col(l) *= -1.0;
          t.v.col(l) *= -1.0;
        }
        break;
      }
    }
  }
}

// Thin SVD by one-sided Jacobi. Singular values at or below tol * sigma_max
// get left vectors from an orthonormal completion.
inline SvdTriplet svd(const Matrix& m, double tol = 1e-12) {
  if (!(tol > 0.0)) throw ArgumentError("svd: tol must be positive");
  if (!m.allFinite()) throw NumericError("svd: matrix has non-finite entries");
  SvdTriplet out;
  if (m.rows() >= m.cols()) {
    out = detail::tall_svd(m, tol);
  } else {
    SvdTriplet t = detail::tall_svd(m.transpose(), tol);
    out.u = std::move(t.v);
    out.sigma = std::move(t.sigma);
    out.v = std::move(t.u);
  }
  canonicalize_signs(out);
  return out;
}

}  // namespace icepool
