#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstddef>
#include <vector>

#include "ppa/error.hpp"
#include "ppa/linalg.hpp"

namespace ppa {

/// Nodes and weights of a rule integrating against the standard Gaussian density.
struct QuadratureRule {
  Matrix nodes;    // M×d
  Vector weights;  // M, summing to 1
};

/// n-point Gauss-Hermite rule for the standard normal weight (Golub-Welsch on the
/// probabilists' Jacobi matrix, off-diagonal √k). Exact for polynomials of degree ≤ 2n−1.
inline QuadratureRule gauss_hermite(int n) {
  require(n >= 1, ErrorCode::InvalidArgument, "quadrature level must be >= 1");
  Matrix jacobi = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(jacobi);
  QuadratureRule rule;
  rule.nodes = eig.eigenvalues();
  rule.weights = eig.eigenvectors().row(0).transpose().cwiseAbs2();
  // Symmetrize to remove eigensolver round-off (nodes are symmetric about 0).
  for (int k = 0; k < n / 2; ++k) {
    const double x = 0.5 * (rule.nodes(n - 1 - k) - rule.nodes(k));
    const double w = 0.5 * (rule.weights(k) + rule.weights(n - 1 - k));
    rule.nodes(k) = -x;
    rule.nodes(n - 1 - k) = x;
    rule.weights(k) = w;
    rule.weights(n - 1 - k) = w;
  }
  if (n % 2 == 1) rule.nodes(n / 2) = 0.0;
  rule.weights /= rule.weights.sum();
  return rule;
}

/// Full tensor product of the n-point rule in d dimensions (n^d nodes).
inline QuadratureRule tensor_gauss_hermite(int n, int d) {
  require(d >= 1, ErrorCode::InvalidArgument, "quadrature dimension must be >= 1");
  const QuadratureRule line = gauss_hermite(n);
  std::size_t count = 1;
  for (int i = 0; i < d; ++i) count *= static_cast<std::size_t>(n);
  QuadratureRule rule;
  rule.nodes.resize(static_cast<Eigen::Index>(count), d);
  rule.weights.resize(static_cast<Eigen::Index>(count));
  std::vector<int> digit(static_cast<std::size_t>(d), 0);
  for (std::size_t m = 0; m < count; ++m) {
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      const int j = digit[static_cast<std::size_t>(i)];
      rule.nodes(static_cast<Eigen::Index>(m), i) = line.nodes(j);
      w *= line.weights(j);
    }
    rule.weights(static_cast<Eigen::Index>(m)) = w;
    for (int i = d - 1; i >= 0; --i) {
      if (++digit[static_cast<std::size_t>(i)] < n) break;
      digit[static_cast<std::size_t>(i)] = 0;
    }
  }
  return rule;
}

}  // namespace ppa
