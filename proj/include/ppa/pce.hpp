#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "ppa/error.hpp"
#include "ppa/linalg.hpp"
#include "ppa/multiindex.hpp"
#include "ppa/quadrature.hpp"
#include "ppa/random.hpp"

namespace ppa {

/// r×d matrix with orthonormal rows mapping original Gaussian inputs to reduced ones.
class ProjectionStack {
 public:
  static constexpr double kTolerance = 1e-10;

  ProjectionStack() = default;

  explicit ProjectionStack(Matrix rows, double tol = kTolerance) : rows_(std::move(rows)) {
    require(rows_.rows() >= 1, ErrorCode::InvalidArgument, "projection stack needs >= 1 row");
    require(rows_.rows() <= rows_.cols(), ErrorCode::InvalidArgument,
            "projection stack has more rows than columns");
    require(rows_.allFinite(), ErrorCode::InvalidArgument, "projection stack is not finite");
    const double err = orthonormality_error(rows_);
    require(err < tol, ErrorCode::NonOrthogonal,
            "projection rows are not orthonormal (max |RRᵀ-I| = " + std::to_string(err) + ")");
  }

  static ProjectionStack identity(int d) { return ProjectionStack(Matrix::Identity(d, d)); }

  int r() const noexcept { return static_cast<int>(rows_.rows()); }
  int d() const noexcept { return static_cast<int>(rows_.cols()); }
  const Matrix& rows() const noexcept { return rows_; }

  /// Row-wise z = R x for an M×d matrix of points.
  Matrix project(const Matrix& points) const {
    require(points.cols() == rows_.cols(), ErrorCode::DimensionMismatch,
            "points have " + std::to_string(points.cols()) + " columns, projection expects " +
                std::to_string(rows_.cols()));
    return points * rows_.transpose();
  }

  /// First `count` rows as a new stack.
  ProjectionStack leading(int count) const { return ProjectionStack(rows_.topRows(count)); }

 private:
  Matrix rows_;
};

/// N Gaussian-space input points paired with scalar outputs.
struct Dataset {
  Matrix inputs;  // N×d
  Vector outputs;  // N

  Dataset() = default;
  Dataset(Matrix x, Vector y) : inputs(std::move(x)), outputs(std::move(y)) { validate(); }

  Eigen::Index size() const noexcept { return outputs.size(); }
  int dim() const noexcept { return static_cast<int>(inputs.cols()); }

  void validate() const {
    require(outputs.size() >= 1, ErrorCode::InvalidArgument, "dataset is empty");
    require(inputs.rows() == outputs.size(), ErrorCode::DimensionMismatch,
            "input rows != output count");
    require(inputs.allFinite() && outputs.allFinite(), ErrorCode::InvalidArgument,
            "dataset contains non-finite values");
  }
};

/// Coefficients over a multi-index basis, optionally composed with a projection stack.
struct PceModel {
  MultiIndexBasis basis;
  Vector coefficients;
  std::optional<ProjectionStack> projection;
  int input_dim = 0;

  PceModel() = default;

  PceModel(MultiIndexBasis b, Vector coeffs, std::optional<ProjectionStack> proj = std::nullopt)
      : basis(std::move(b)), coefficients(std::move(coeffs)), projection(std::move(proj)) {
    input_dim = projection ? projection->d() : basis.dim();
    validate();
  }

  void validate() const {
    require(static_cast<std::size_t>(coefficients.size()) == basis.size(),
            ErrorCode::DimensionMismatch, "coefficient count != basis size");
    require(coefficients.allFinite(), ErrorCode::InvalidArgument, "non-finite coefficient");
    if (projection) {
      require(projection->r() == basis.dim(), ErrorCode::DimensionMismatch,
              "projection rows != basis dimension");
      require(projection->d() == input_dim, ErrorCode::DimensionMismatch,
              "projection columns != input dimension");
    } else {
      require(basis.dim() == input_dim, ErrorCode::DimensionMismatch,
              "basis dimension != input dimension");
    }
  }

  double coefficient(const MultiIndex& alpha) const {
    const std::size_t k = basis.find(alpha);
    return k < basis.size() ? coefficients(static_cast<Eigen::Index>(k)) : 0.0;
  }
};

struct PceFit {
  PceModel model;
  double rss = 0.0;
  Eigen::Index rank = 0;
  /// Leave-one-out residual sum of squares Σ (e_i / (1 − h_ii))², from the hat-matrix
  /// diagonal of the unregularized fit. NaN for ridge fits.
  double loo = std::numeric_limits<double>::quiet_NaN();
};

/// Least-squares PCE fit at already-transformed points (N×basis.d).
///
/// Minimizes Σ (y − Ψc)² + ridge·‖c‖² with column-pivoted Householder QR. With ridge = 0
/// the fit requires N ≥ P + 5 and a numerically full-rank design.
inline PceFit fit_least_squares_points(const Matrix& points, const Vector& y,
                                       const MultiIndexBasis& basis, double ridge = 0.0,
                                       std::optional<ProjectionStack> projection = std::nullopt) {
  require(ridge >= 0.0, ErrorCode::InvalidArgument, "ridge must be non-negative");
  require(points.rows() == y.size(), ErrorCode::DimensionMismatch, "point/output count mismatch");
  const auto n = points.rows();
  const auto terms = static_cast<Eigen::Index>(basis.size());
  if (ridge == 0.0) {
    require(n >= terms + 5, ErrorCode::InsufficientData,
            "need at least " + std::to_string(terms + 5) + " samples for " +
                std::to_string(terms) + " terms, got " + std::to_string(n));
  }
  const Matrix psi = design_matrix(basis, points);

  Vector coeffs;
  Eigen::Index rank = terms;
  if (ridge == 0.0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(psi);
    qr.setThreshold(1e-10);
    rank = qr.rank();
    require(rank == terms, ErrorCode::RankDeficient,
            "design matrix rank " + std::to_string(rank) + " < " + std::to_string(terms));
    coeffs = qr.solve(y);
    const Vector resid = y - psi * coeffs;
    const Matrix q = qr.householderQ() * Matrix::Identity(n, terms);
    double press = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = std::min(q.row(i).squaredNorm(), 1.0 - 1e-12);
      const double e = resid(i) / (1.0 - h);
      press += e * e;
    }
    const double rss = resid.squaredNorm();
    return PceFit{PceModel(basis, std::move(coeffs), std::move(projection)), rss, rank, press};
  } else {
    Matrix aug(n + terms, terms);
    aug.topRows(n) = psi;
    aug.bottomRows(terms) = std::sqrt(ridge) * Matrix::Identity(terms, terms);
    Vector rhs = Vector::Zero(n + terms);
    rhs.head(n) = y;
    Eigen::ColPivHouseholderQR<Matrix> qr(aug);
    rank = qr.rank();
    coeffs = qr.solve(rhs);
  }
  const double rss = (y - psi * coeffs).squaredNorm();
  return PceFit{PceModel(basis, std::move(coeffs), std::move(projection)), rss, rank};
}

inline PceFit fit_least_squares(const Dataset& data, const MultiIndexBasis& basis,
                                double ridge = 0.0) {
  require(data.dim() == basis.dim(), ErrorCode::DimensionMismatch,
          "dataset dimension " + std::to_string(data.dim()) + " != basis dimension " +
              std::to_string(basis.dim()));
  return fit_least_squares_points(data.inputs, data.outputs, basis, ridge);
}

/// Ridge used when an unregularized fit is rank deficient: 1e-8 × mean diagonal of ΨᵀΨ.
inline double fallback_ridge(const MultiIndexBasis& basis, const Matrix& points) {
  const Matrix psi = design_matrix(basis, points);
  const double mean_diag = psi.colwise().squaredNorm().mean();
  return 1e-8 * std::max(mean_diag, 1e-300);
}

/// Ordinary fit, retrying with `fallback_ridge` if the design is rank deficient.
inline PceFit fit_least_squares_robust(const Matrix& points, const Vector& y,
                                       const MultiIndexBasis& basis,
                                       std::optional<ProjectionStack> projection = std::nullopt) {
  try {
    return fit_least_squares_points(points, y, basis, 0.0, projection);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::RankDeficient) throw;
  }
  return fit_least_squares_points(points, y, basis, fallback_ridge(basis, points),
                                  std::move(projection));
}

/// Σ_α c_α ψ_α at points already in the model's basis coordinates.
inline Vector evaluate_basis_coords(const MultiIndexBasis& basis, const Vector& coefficients,
                                    const Matrix& points) {
  constexpr Eigen::Index kChunk = 4096;
  Vector out(points.rows());
  for (Eigen::Index start = 0; start < points.rows(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, points.rows() - start);
    out.segment(start, len) = design_matrix(basis, points.middleRows(start, len)) * coefficients;
  }
  return out;
}

/// Model value at each row of an M×input_dim matrix.
inline Vector evaluate(const PceModel& model, const Matrix& points) {
  require(points.cols() == model.input_dim, ErrorCode::DimensionMismatch,
          "points have " + std::to_string(points.cols()) + " columns, model expects " +
              std::to_string(model.input_dim));
  if (model.projection) {
    return evaluate_basis_coords(model.basis, model.coefficients,
                                 model.projection->project(points));
  }
  return evaluate_basis_coords(model.basis, model.coefficients, points);
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance read off the orthonormal coefficients.
inline Moments moments(const PceModel& model) {
  if (model.coefficients.size() == 0) return {};
  const double mean = model.coefficients(0);
  const double var = model.coefficients.squaredNorm() - mean * mean;
  return {mean, std::max(var, 0.0)};
}

inline constexpr std::size_t kTransferMaxNodes = 200000;
inline constexpr std::uint64_t kTransferMcSeed = 0x7a3c5e11ULL;

/// Gaussian inner products ⟨ψ_β, ψ_α∘A⟩ as a P_to×P_from matrix.
///
/// Uses a tensor Gauss-Hermite rule with `level` nodes per dimension whenever it needs at
/// most kTransferMaxNodes nodes, and seeded Monte Carlo with that many samples otherwise.
/// level ≤ 0 selects max(p_from, p_to) + 1, which makes the tensor rule exact.
inline Matrix inner_product_matrix(const MultiIndexBasis& basis_from,
                                   const MultiIndexBasis& basis_to, const Matrix& rotation,
                                   int level = 0) {
  const int d = basis_from.dim();
  require(basis_to.dim() == d, ErrorCode::DimensionMismatch, "bases differ in dimension");
  require(rotation.rows() == d && rotation.cols() == d, ErrorCode::DimensionMismatch,
          "rotation must be d×d");
  const double err = orthonormality_error(rotation);
  require(err < 1e-8, ErrorCode::NonOrthogonal,
          "rotation is not orthogonal (max |AAᵀ-I| = " + std::to_string(err) + ")");
  if (level <= 0) level = std::max(basis_from.degree(), basis_to.degree()) + 1;

  double nodes = 1.0;
  for (int i = 0; i < d; ++i) nodes *= level;

  QuadratureRule rule;
  if (nodes <= static_cast<double>(kTransferMaxNodes)) {
    rule = tensor_gauss_hermite(level, d);
  } else {
    GaussianStream normal(kTransferMcSeed);
    const auto m = static_cast<Eigen::Index>(kTransferMaxNodes);
    rule.nodes.resize(m, d);
    for (Eigen::Index i = 0; i < m; ++i)
      for (int j = 0; j < d; ++j) rule.nodes(i, j) = normal();
    rule.weights = Vector::Constant(m, 1.0 / static_cast<double>(m));
  }
  const Matrix psi_from = design_matrix(basis_from, rule.nodes);
  const Matrix psi_to = design_matrix(basis_to, rule.nodes * rotation.transpose());
  return psi_to.transpose() * rule.weights.asDiagonal() * psi_from;
}

/// Re-express a full-dimensional model in rotated coordinates η = Aξ:
/// the result satisfies evaluate(result, Aξ) = evaluate(model, ξ).
inline PceModel transfer_coefficients(const PceModel& model, const Matrix& rotation,
                                      const MultiIndexBasis& target_basis, int level = 0) {
  require(!model.projection, ErrorCode::InvalidArgument,
          "coefficient transfer needs a full-dimensional model");
  const Matrix m = inner_product_matrix(model.basis, target_basis, rotation, level);
  return PceModel(target_basis, m * model.coefficients);
}

}  // namespace ppa
