#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "ppa/multiindex.hpp"
#include "ppa/quadrature.hpp"
#include "ppa/random.hpp"

using namespace ppa;

namespace {

// Closed-form C(n, k) computed in floating point, independent of ppa::binomial.
double choose(int n, int k) {
  return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
}

}  // namespace

TEST(MultiIndex, BasisSizes) {
  EXPECT_EQ(enumerate_basis(7, 3).size(), 120u);
  EXPECT_EQ(enumerate_basis(4, 3).size(), 35u);
  const auto b = enumerate_basis(3, 0);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0], MultiIndex({0, 0, 0}));
}

TEST(MultiIndex, RejectsZeroDimension) {
  EXPECT_THROW(enumerate_basis(0, 2), Error);
  EXPECT_THROW(enumerate_basis(2, -1), Error);
}

TEST(MultiIndex, CountMatchesClosedForm) {
  for (int d = 1; d <= 8; ++d)
    for (int p = 0; p <= 5; ++p)
      EXPECT_EQ(static_cast<double>(enumerate_basis(d, p).size()), choose(d + p, p)) << d << "," << p;
}

TEST(MultiIndex, GradedOrdering) {
  const auto b = enumerate_basis(4, 3);
  EXPECT_EQ(total_degree(b[0]), 0);
  for (std::size_t k = 1; k < b.size(); ++k) {
    EXPECT_LE(total_degree(b[k - 1]), total_degree(b[k]));
    if (total_degree(b[k - 1]) == total_degree(b[k])) EXPECT_GT(b[k - 1], b[k]);  // lex within a degree
    EXPECT_LE(total_degree(b[k]), 3);
  }
  // First-order terms sit right after the constant, in coordinate order.
  for (int i = 0; i < 4; ++i) {
    MultiIndex e(4, 0);
    e[static_cast<std::size_t>(i)] = 1;
    EXPECT_EQ(b[static_cast<std::size_t>(1 + i)], e);
  }
}

TEST(MultiIndex, EnumerationIsDeterministic) {
  EXPECT_EQ(enumerate_basis(5, 4).indices(), enumerate_basis(5, 4).indices());
}

TEST(MultiIndex, ExplicitIndexListMustBeCanonical) {
  auto idx = enumerate_basis(2, 2).indices();
  EXPECT_NO_THROW(MultiIndexBasis(2, 2, idx));
  std::swap(idx[1], idx[2]);
  EXPECT_THROW(MultiIndexBasis(2, 2, idx), Error);
}

TEST(Hermite, Values) {
  EXPECT_DOUBLE_EQ(hermite_value(0, 1.7), 1.0);
  EXPECT_DOUBLE_EQ(hermite_value(1, 1.7), 1.7);
  EXPECT_DOUBLE_EQ(hermite_value(2, 2.0), 3.0);
  // He_3 = x³ − 3x, He_4 = x⁴ − 6x² + 3
  for (double x : {-2.3, -0.4, 0.0, 1.1, 2.9}) {
    EXPECT_NEAR(hermite_value(3, x), x * x * x - 3 * x, 1e-12);
    EXPECT_NEAR(hermite_value(4, x), x * x * x * x - 6 * x * x + 3, 1e-12);
  }
}

TEST(Hermite, Derivatives) {
  EXPECT_DOUBLE_EQ(hermite_derivative(0, 5.0), 0.0);
  EXPECT_DOUBLE_EQ(hermite_derivative(2, 2.0), 4.0);
  EXPECT_NEAR(hermite_derivative(3, 1.0), 0.0, 1e-15);
}

TEST(BasisRow, Examples) {
  const Vector r1 = basis_row(enumerate_basis(1, 2), Vector::Zero(1));
  EXPECT_NEAR(r1(0), 1.0, 1e-15);
  EXPECT_NEAR(r1(1), 0.0, 1e-15);
  EXPECT_NEAR(r1(2), -1.0 / std::sqrt(2.0), 1e-15);

  const Vector ab = (Vector(2) << 0.7, -1.3).finished();
  const Vector r2 = basis_row(enumerate_basis(2, 1), ab);
  EXPECT_NEAR(r2(0), 1.0, 1e-15);
  EXPECT_NEAR(r2(1), 0.7, 1e-15);
  EXPECT_NEAR(r2(2), -1.3, 1e-15);

  const auto b22 = enumerate_basis(2, 2);
  const Vector r3 = basis_row(b22, Vector::Ones(2));
  EXPECT_NEAR(r3(static_cast<Eigen::Index>(b22.find({1, 1}))), 1.0, 1e-15);
}

TEST(BasisRow, DimensionMismatch) {
  EXPECT_THROW(basis_row(enumerate_basis(3, 2), Vector::Zero(2)), Error);
  EXPECT_THROW(basis_gradient_row(enumerate_basis(2, 2), Vector::Zero(2), 2), Error);
}

TEST(BasisGradient, Examples) {
  const Vector g = basis_gradient_row(enumerate_basis(1, 2), Vector::Constant(1, 2.0), 0);
  EXPECT_NEAR(g(0), 0.0, 1e-15);
  EXPECT_NEAR(g(1), 1.0, 1e-15);
  EXPECT_NEAR(g(2), 4.0 / std::sqrt(2.0), 1e-14);
}

TEST(BasisGradient, MatchesCentralDifferences) {
  const double h = 1e-6;
  auto check = [&](const MultiIndexBasis& b, const Vector& x) {
    for (int c = 0; c < b.dim(); ++c) {
      const Vector g = basis_gradient_row(b, x, c);
      EXPECT_EQ(g(0), 0.0);
      Vector xp = x, xm = x;
      xp(c) += h;
      xm(c) -= h;
      const Vector fd = (basis_row(b, xp) - basis_row(b, xm)) / (2 * h);
      for (Eigen::Index k = 0; k < g.size(); ++k)
        EXPECT_LT(std::abs(fd(k) - g(k)) / std::max(1.0, std::abs(g(k))), 1e-6) << "k=" << k;
    }
  };
  check(enumerate_basis(2, 4), (Vector(2) << 0.3, -1.2).finished());
  GaussianStream rng(11);
  for (int d = 1; d <= 4; ++d) {
    for (int rep = 0; rep < 5; ++rep) {
      Vector x(d);
      for (int i = 0; i < d; ++i) x(i) = -3.0 + 6.0 * rng.uniform();
      check(enumerate_basis(d, 4), x);
    }
  }
}

TEST(Hermite, OrthonormalUnderQuadrature) {
  for (int d = 1; d <= 3; ++d) {
    for (int p = 0; p <= 4; ++p) {
      const auto b = enumerate_basis(d, p);
      const QuadratureRule q = tensor_gauss_hermite(p + 1, d);
      const Matrix psi = design_matrix(b, q.nodes);
      const Matrix gram = psi.transpose() * q.weights.asDiagonal() * psi;
      const double err = (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
      EXPECT_LT(err, 1e-10) << "d=" << d << " p=" << p;
    }
  }
}

TEST(Quadrature, IntegratesGaussianMoments) {
  const QuadratureRule q = gauss_hermite(6);
  EXPECT_NEAR(q.weights.sum(), 1.0, 1e-15);
  // E[x²] = 1, E[x⁴] = 3, E[x^10] = 945 (exact up to degree 11).
  EXPECT_NEAR(q.weights.dot(q.nodes.col(0).array().square().matrix()), 1.0, 1e-13);
  EXPECT_NEAR(q.weights.dot(q.nodes.col(0).array().pow(4).matrix()), 3.0, 1e-12);
  EXPECT_NEAR(q.weights.dot(q.nodes.col(0).array().pow(10).matrix()), 945.0, 1e-9);
}
