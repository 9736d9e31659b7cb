#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "ppa/error.hpp"
#include "ppa/random.hpp"

namespace ppa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// max |M Mᵀ − I| over all entries.
inline double orthonormality_error(const Matrix& rows) {
  if (rows.rows() == 0) return 0.0;
  const Matrix gram = rows * rows.transpose();
  return (gram - Matrix::Identity(rows.rows(), rows.rows())).cwiseAbs().maxCoeff();
}

/// Orthogonalize `v` against the first `count` rows of `basis` (assumed orthonormal) and
/// normalize. Two modified Gram-Schmidt passes. Returns nullopt if the remainder norm,
/// relative to the input norm, falls below `tol`.
inline std::optional<Vector> orthogonalize(Vector v, const Matrix& basis, Eigen::Index count,
                                           double tol = 1e-10) {
  const double input_norm = v.norm();
  if (!(input_norm > 0.0)) return std::nullopt;
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index k = 0; k < count; ++k) {
      v -= basis.row(k).dot(v) * basis.row(k).transpose();
    }
  }
  const double norm = v.norm();
  if (norm < tol * input_norm) return std::nullopt;
  return Vector(v / norm);
}

inline std::optional<Vector> orthogonalize(Vector v, const Matrix& basis, double tol = 1e-10) {
  return orthogonalize(std::move(v), basis, basis.rows(), tol);
}

/// Extend orthonormal `rows` (r×d) to a d×d orthogonal matrix. Candidate rows are tried
/// in the order given by `candidates`; unit coordinate vectors follow as a fallback.
inline Matrix complete_rotation(const Matrix& rows, const std::vector<Vector>& candidates = {}) {
  const Eigen::Index d = rows.cols();
  Matrix out(d, d);
  Eigen::Index filled = rows.rows();
  out.topRows(filled) = rows;
  auto try_add = [&](const Vector& cand) {
    if (filled >= d) return;
    if (auto v = orthogonalize(cand, out, filled)) out.row(filled++) = v->transpose();
  };
  for (const auto& c : candidates) try_add(c);
  for (Eigen::Index i = 0; i < d && filled < d; ++i) try_add(Vector::Unit(d, i));
  require(filled == d, ErrorCode::InvalidArgument, "could not complete rotation");
  return out;
}

/// Same as `complete_rotation` but with seeded random Gaussian candidates.
inline Matrix complete_rotation_random(const Matrix& rows, std::uint64_t seed) {
  const Eigen::Index d = rows.cols();
  GaussianStream normal(seed);
  std::vector<Vector> candidates;
  for (Eigen::Index k = rows.rows(); k < d; ++k) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = normal();
    candidates.push_back(std::move(v));
  }
  return complete_rotation(rows, candidates);
}

/// Orthonormal basis (as columns, d×(d−r)) for the orthogonal complement of `rows`.
inline Matrix orthogonal_complement(const Matrix& rows) {
  const Eigen::Index r = rows.rows();
  const Eigen::Index d = rows.cols();
  if (r == 0) return Matrix::Identity(d, d);
  const Matrix full = complete_rotation(rows);
  return full.bottomRows(d - r).transpose();
}

/// argmin_c Σ w_i (u_i − x_iᵀ c)², solved by column-pivoted QR on the √w-scaled system.
inline Vector weighted_least_squares(const Matrix& x, const Vector& u, const Vector& w) {
  const Vector sw = w.cwiseSqrt();
  const Matrix xs = sw.asDiagonal() * x;
  const Vector us = sw.cwiseProduct(u);
  return xs.colPivHouseholderQr().solve(us);
}

}  // namespace ppa
