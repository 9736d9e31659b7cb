#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ppa/error.hpp"
#include "ppa/linalg.hpp"

namespace ppa {

/// Per-coordinate polynomial degrees of one multivariate basis term.
using MultiIndex = std::vector<int>;

inline int total_degree(const MultiIndex& alpha) {
  return std::accumulate(alpha.begin(), alpha.end(), 0);
}

/// C(n, k), exact for the small arguments used here.
inline std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t out = 1;
  for (std::size_t i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

/// Probabilists' Hermite polynomial He_n(x) by three-term recurrence.
inline double hermite_value(int n, double x) {
  if (n <= 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int k = 1; k < n; ++k) {
    const double next = x * cur - k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// He_n'(x) = n·He_{n−1}(x).
inline double hermite_derivative(int n, double x) {
  if (n <= 0) return 0.0;
  return n * hermite_value(n - 1, x);
}

/// Total-degree truncated set of d-dimensional multi-indices.
///
/// Terms are ordered by ascending total degree; within a degree, indices are sorted in
/// descending lexicographic order, so the first-order block reads e_1, e_2, ..., e_d and
/// position 1 + i holds the linear term in coordinate i.
class MultiIndexBasis {
 public:
  MultiIndexBasis() = default;

  MultiIndexBasis(int d, int p) : d_(d), p_(p) {
    require(d >= 1, ErrorCode::InvalidArgument, "basis dimension must be >= 1");
    require(p >= 0, ErrorCode::InvalidArgument, "basis degree must be >= 0");
    MultiIndex work(static_cast<std::size_t>(d), 0);
    for (int deg = 0; deg <= p; ++deg) append_degree(work, 0, deg);
    inv_sqrt_factorial_.resize(static_cast<std::size_t>(p) + 1);
    double fact = 1.0;
    for (int n = 0; n <= p; ++n) {
      if (n > 0) fact *= n;
      inv_sqrt_factorial_[static_cast<std::size_t>(n)] = 1.0 / std::sqrt(fact);
    }
  }

  /// Build from an explicit index list (e.g. a deserialized model). Ordering is kept.
  MultiIndexBasis(int d, int p, std::vector<MultiIndex> indices) : MultiIndexBasis(d, p) {
    require(indices == indices_, ErrorCode::Parse,
            "index list does not match the canonical basis ordering");
  }

  int dim() const noexcept { return d_; }
  int degree() const noexcept { return p_; }
  std::size_t size() const noexcept { return indices_.size(); }
  const std::vector<MultiIndex>& indices() const noexcept { return indices_; }
  const MultiIndex& operator[](std::size_t k) const { return indices_[k]; }

  /// Position of `alpha` in the basis, or size() if absent.
  std::size_t find(const MultiIndex& alpha) const {
    for (std::size_t k = 0; k < indices_.size(); ++k)
      if (indices_[k] == alpha) return k;
    return indices_.size();
  }

  /// Normalized univariate values ψ_n(x_i) = He_n(x_i)/√(n!) for n ≤ p, row-major d×(p+1).
  void univariate_table(std::span<const double> x, std::vector<double>& out) const {
    const std::size_t stride = static_cast<std::size_t>(p_) + 1;
    out.resize(static_cast<std::size_t>(d_) * stride);
    for (int i = 0; i < d_; ++i) {
      double* row = out.data() + static_cast<std::size_t>(i) * stride;
      const double xi = x[static_cast<std::size_t>(i)];
      double prev = 1.0;
      double cur = xi;
      row[0] = 1.0;
      if (p_ >= 1) row[1] = xi;
      for (int n = 1; n < p_; ++n) {
        const double next = xi * cur - n * prev;
        prev = cur;
        cur = next;
        row[n + 1] = cur;
      }
      for (int n = 0; n <= p_; ++n) row[n] *= inv_sqrt_factorial_[static_cast<std::size_t>(n)];
    }
  }

  /// ψ_α(x) for every α in the basis.
  void row(std::span<const double> x, std::span<double> out) const {
    require(x.size() == static_cast<std::size_t>(d_), ErrorCode::DimensionMismatch,
            "point length " + std::to_string(x.size()) + " != basis dimension " +
                std::to_string(d_));
    thread_local std::vector<double> table;
    univariate_table(x, table);
    const std::size_t stride = static_cast<std::size_t>(p_) + 1;
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      double v = 1.0;
      const MultiIndex& alpha = indices_[k];
      for (int i = 0; i < d_; ++i) {
        const int a = alpha[static_cast<std::size_t>(i)];
        if (a != 0) v *= table[static_cast<std::size_t>(i) * stride + static_cast<std::size_t>(a)];
      }
      out[k] = v;
    }
  }

  /// ∂ψ_α/∂x_coordinate for every α, using ψ_n' = √n·ψ_{n−1} on the selected factor.
  void gradient_row(std::span<const double> x, int coordinate, std::span<double> out) const {
    require(x.size() == static_cast<std::size_t>(d_), ErrorCode::DimensionMismatch,
            "point length does not match basis dimension");
    require(coordinate >= 0 && coordinate < d_, ErrorCode::InvalidArgument,
            "gradient coordinate out of range");
    thread_local std::vector<double> table;
    univariate_table(x, table);
    const std::size_t stride = static_cast<std::size_t>(p_) + 1;
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      const MultiIndex& alpha = indices_[k];
      const int ac = alpha[static_cast<std::size_t>(coordinate)];
      if (ac == 0) {
        out[k] = 0.0;
        continue;
      }
      double v = std::sqrt(static_cast<double>(ac)) *
                 table[static_cast<std::size_t>(coordinate) * stride + static_cast<std::size_t>(ac - 1)];
      for (int i = 0; i < d_; ++i) {
        if (i == coordinate) continue;
        const int a = alpha[static_cast<std::size_t>(i)];
        if (a != 0) v *= table[static_cast<std::size_t>(i) * stride + static_cast<std::size_t>(a)];
      }
      out[k] = v;
    }
  }

  friend bool operator==(const MultiIndexBasis& a, const MultiIndexBasis& b) {
    return a.d_ == b.d_ && a.p_ == b.p_;
  }

 private:
  void append_degree(MultiIndex& work, int pos, int remaining) {
    if (pos == d_ - 1) {
      work[static_cast<std::size_t>(pos)] = remaining;
      indices_.push_back(work);
      return;
    }
    for (int a = remaining; a >= 0; --a) {
      work[static_cast<std::size_t>(pos)] = a;
      append_degree(work, pos + 1, remaining - a);
    }
    work[static_cast<std::size_t>(pos)] = 0;
  }

  int d_ = 0;
  int p_ = 0;
  std::vector<MultiIndex> indices_;
  std::vector<double> inv_sqrt_factorial_;
};

inline MultiIndexBasis enumerate_basis(int d, int p) { return MultiIndexBasis(d, p); }

inline Vector basis_row(const MultiIndexBasis& basis, const Vector& point) {
  Vector out(static_cast<Eigen::Index>(basis.size()));
  basis.row(std::span<const double>(point.data(), static_cast<std::size_t>(point.size())),
            std::span<double>(out.data(), basis.size()));
  return out;
}

inline Vector basis_gradient_row(const MultiIndexBasis& basis, const Vector& point, int coordinate) {
  Vector out(static_cast<Eigen::Index>(basis.size()));
  basis.gradient_row(std::span<const double>(point.data(), static_cast<std::size_t>(point.size())),
                     coordinate, std::span<double>(out.data(), basis.size()));
  return out;
}

/// N×P design matrix Ψ(i, k) = ψ_k(points.row(i)).
inline Matrix design_matrix(const MultiIndexBasis& basis, const Matrix& points) {
  require(points.cols() == basis.dim(), ErrorCode::DimensionMismatch,
          "point dimension " + std::to_string(points.cols()) + " != basis dimension " +
              std::to_string(basis.dim()));
  // Row-major scratch so each point is contiguous.
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMatrix pts = points;
  RowMatrix out(points.rows(), static_cast<Eigen::Index>(basis.size()));
  const auto d = static_cast<std::size_t>(basis.dim());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    basis.row(std::span<const double>(pts.data() + i * pts.cols(), d),
              std::span<double>(out.data() + i * out.cols(), basis.size()));
  }
  return out;
}

/// N×P matrix of ∂ψ_k/∂x_coordinate at each point.
inline Matrix gradient_matrix(const MultiIndexBasis& basis, const Matrix& points, int coordinate) {
  require(points.cols() == basis.dim(), ErrorCode::DimensionMismatch,
          "point dimension does not match basis dimension");
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMatrix pts = points;
  RowMatrix out(points.rows(), static_cast<Eigen::Index>(basis.size()));
  const auto d = static_cast<std::size_t>(basis.dim());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    basis.gradient_row(std::span<const double>(pts.data() + i * pts.cols(), d), coordinate,
                       std::span<double>(out.data() + i * out.cols(), basis.size()));
  }
  return out;
}

}  // namespace ppa
