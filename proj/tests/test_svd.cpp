#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include <icepool/svd.hpp>

#include "support/oracles.hpp"

using namespace icepool;

namespace {

Matrix random_matrix(Rng& rng, int rows, int cols, double zero_fraction = 0.0) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.bernoulli(zero_fraction) ? 0.0 : rng.uniform(-2.0, 2.0);
  return m;
}

Matrix random_binary(Rng& rng, int rows, int cols, double density) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.bernoulli(density) ? 1.0 : 0.0;
  return m;
}

void expect_valid(const Matrix& m, const SvdTriplet& t, double tol) {
  const auto p = std::min(m.rows(), m.cols());
  ASSERT_EQ(t.sigma.size(), p);
  ASSERT_EQ(t.u.rows(), m.rows());
  ASSERT_EQ(t.v.rows(), m.cols());
  EXPECT_LE((t.u.transpose() * t.u - Matrix::Identity(p, p)).cwiseAbs().maxCoeff(), tol);
  EXPECT_LE((t.v.transpose() * t.v - Matrix::Identity(p, p)).cwiseAbs().maxCoeff(), tol);
  if (m.size() > 0) {
    EXPECT_LE((t.reconstruct() - m).cwiseAbs().maxCoeff(), tol);
  }
  for (Eigen::Index l = 0; l < p; ++l) {
    EXPECT_GE(t.sigma(l), 0.0);
    if (l > 0) {
      EXPECT_GE(t.sigma(l - 1), t.sigma(l));
    }
  }
}

}  // namespace

TEST(Svd, G1BlockHandComputed) {
  Matrix block(3, 3);
  block << 1, 1, 0, 0, 0, 1, 0, 0, 0;
  const auto t = svd(block);
  expect_valid(block, t, 1e-12);
  EXPECT_NEAR(t.sigma(0), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(t.sigma(1), 1.0, 1e-12);
  EXPECT_NEAR(t.sigma(2), 0.0, 1e-12);
  // Canonical signs make the first pair positive.
  EXPECT_NEAR(t.u(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(t.u(1, 0)) + std::abs(t.u(2, 0)), 0.0, 1e-12);
  EXPECT_NEAR(t.v(0, 0), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(t.v(1, 0), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(t.v(2, 0), 0.0, 1e-12);
}

TEST(Svd, Identity) {
  const auto t = svd(Matrix::Identity(3, 3));
  for (int l = 0; l < 3; ++l) EXPECT_NEAR(t.sigma(l), 1.0, 1e-15);
  expect_valid(Matrix::Identity(3, 3), t, 1e-12);
}

TEST(Svd, ZeroMatrixGetsOrthonormalCompletion) {
  for (auto [r, c] : {std::pair{3, 3}, std::pair{4, 2}, std::pair{2, 5}}) {
    const Matrix z = Matrix::Zero(r, c);
    const auto t = svd(z);
    EXPECT_TRUE(t.sigma.isZero());
    expect_valid(z, t, 1e-12);
  }
}

TEST(Svd, AgreesWithEigenOnRandomMatrices) {
  Rng rng(314);
  for (int trial = 0; trial < 300; ++trial) {
    const int rows = rng.uniform_int(1, 12);
    const int cols = rng.uniform_int(1, 12);
    const Matrix m = trial % 2 ? random_matrix(rng, rows, cols, 0.3) : random_binary(rng, rows, cols, 0.35);
    const auto t = svd(m, 1e-10);
    expect_valid(m, t, 1e-10);
    const Eigen::JacobiSVD<Matrix> reference(m);
    for (Eigen::Index l = 0; l < t.sigma.size(); ++l)
      EXPECT_NEAR(t.sigma(l), reference.singularValues()(l), 1e-10);
  }
}

TEST(Svd, CanonicalSignsAndDeterminism) {
  Rng rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix m = random_binary(rng, rng.uniform_int(1, 8), rng.uniform_int(1, 8), 0.4);
    const auto a = svd(m);
    const auto b = svd(m);
    EXPECT_EQ(a.u, b.u);
    EXPECT_EQ(a.v, b.v);
    EXPECT_EQ(a.sigma, b.sigma);
    for (Eigen::Index l = 0; l < a.u.cols(); ++l) {
      Eigen::Index peak = 0;
      const double top = a.u.col(l).cwiseAbs().maxCoeff();
      while (std::abs(a.u(peak, l)) < top - 1e-12) ++peak;
      EXPECT_GT(a.u(peak, l), 0.0);
    }
  }
}

TEST(Svd, RankDeficientBinaryBlocks) {
  Matrix m(4, 3);
  m << 1, 1, 0, 1, 1, 0, 0, 0, 1, 0, 0, 1;
  const auto t = svd(m);
  expect_valid(m, t, 1e-12);
  EXPECT_NEAR(t.sigma(0), 2.0, 1e-12);
  EXPECT_NEAR(t.sigma(1), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(t.sigma(2), 0.0, 1e-12);
}

TEST(Svd, RejectsNonFiniteAndBadTolerance) {
  Matrix m = Matrix::Ones(2, 2);
  m(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(svd(m), NumericError);
  EXPECT_THROW(svd(Matrix::Ones(2, 2), 0.0), ArgumentError);
}

TEST(Svd, EckartYoungTruncation) {
  Rng rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix m = random_binary(rng, rng.uniform_int(2, 9), rng.uniform_int(2, 9), 0.4);
    const auto t = svd(m);
    double previous = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r <= t.components(); ++r) {
      const Matrix residual = m - t.reconstruct(r);
      const double spectral = Eigen::JacobiSVD<Matrix>(residual).singularValues()(0);
      const double expected = r < t.components() ? t.sigma(r) : 0.0;
      EXPECT_NEAR(spectral, expected, 1e-10);
      EXPECT_LE(spectral, previous + 1e-12);
      previous = spectral;
    }
  }
}
