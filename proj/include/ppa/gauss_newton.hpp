#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <string>

#include "ppa/error.hpp"
#include "ppa/linalg.hpp"

namespace ppa {

/// Settings shared by the PPR and PPA alternating (smooth fit / direction) loops.
/// How an outer stage's improvement is measured. LeaveOneOut compares the PRESS statistic
/// of the refitted PCE, TrainingRss the in-sample residual sum of squares.
enum class StageCriterion { LeaveOneOut, TrainingRss };

inline const char* to_string(StageCriterion c) {
  return c == StageCriterion::LeaveOneOut ? "loo" : "rss";
}

inline StageCriterion parse_stage_criterion(const std::string& s) {
  if (s == "loo") return StageCriterion::LeaveOneOut;
  if (s == "rss") return StageCriterion::TrainingRss;
  fail(ErrorCode::Parse, "unknown stage criterion '" + s + "' (expected loo or rss)");
}

/// PRESS of the sample mean: every residual inflated by n/(n−1).
inline double constant_loo(double tss, Eigen::Index n) {
  const double f = static_cast<double>(n) / static_cast<double>(n - 1);
  return tss * f * f;
}

struct InnerLoopOptions {
  int max_iterations = 50;
  double direction_tol = 1e-12;  // stop when 1 − |c_new·c_old| falls below this
  double rss_tol = 1e-4;        // or when the relative RSS change falls below this
  double weight_floor = 1e-8;   // drop points with |derivative| < floor · max|derivative|
  int max_halvings = 5;
};

/// Weighted least-squares direction from one Gauss-Newton linearization.
///
/// Target u = c_oldᵀx + residual/derivative, weight = derivative², no bias term. The
/// direction is restricted to the orthogonal complement of `fixed` (rows, may be empty)
/// and returned with unit norm. Throws AllWeightsDegenerate when every point is dropped.
inline Vector gauss_newton_direction(const Matrix& x, const Vector& c_old, const Vector& residual,
                                     const Vector& derivative, const Matrix& fixed,
                                     double weight_floor) {
  const Eigen::Index n = x.rows();
  require(residual.size() == n && derivative.size() == n, ErrorCode::DimensionMismatch,
          "residual/derivative length mismatch");
  const double max_abs = derivative.cwiseAbs().maxCoeff();
  if (!(max_abs > 0.0) || !std::isfinite(max_abs))
    fail(ErrorCode::AllWeightsDegenerate, "derivative vanishes at every point");
  const double floor = weight_floor * max_abs;

  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(derivative(i)) >= floor) ++kept;
  if (kept == 0) fail(ErrorCode::AllWeightsDegenerate, "all points excluded by derivative floor");

  const Matrix basis = orthogonal_complement(fixed);  // d×m, columns orthonormal
  const Vector proj_old = x * c_old;
  Matrix reg(kept, basis.cols());
  Vector u(kept);
  Vector w(kept);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double fd = derivative(i);
    if (std::abs(fd) < floor) continue;
    reg.row(k) = x.row(i) * basis;
    u(k) = proj_old(i) + residual(i) / fd;
    w(k) = fd * fd;
    ++k;
  }
  const Vector a = weighted_least_squares(reg, u, w);
  Vector c = basis * a;
  auto unit = orthogonalize(c, fixed, 1e-14);
  if (!unit) return c_old;
  // Keep the sign convention of the incoming direction.
  if (unit->dot(c_old) < 0.0) *unit = -*unit;
  return *unit;
}

template <class State>
struct DirectionStep {
  Vector direction;
  State state;
  double rss = 0.0;
  int halvings = 0;
  bool moved = false;
};

/// Try the full step c_old → proposal, halving up to `max_halvings` times until
/// `refit(c)` (returning {state, rss}) does not increase the RSS; otherwise keep c_old.
template <class State, class Refit>
DirectionStep<State> damped_direction_step(const Vector& c_old, State current, double rss_old,
                                           const Vector& proposal, const Matrix& fixed,
                                           int max_halvings, Refit&& refit) {
  double t = 1.0;
  for (int h = 0; h <= max_halvings; ++h, t *= 0.5) {
    const Vector step = c_old + t * (proposal - c_old);
    auto c = orthogonalize(step, fixed, 1e-14);
    if (!c) continue;
    auto [state, rss] = refit(*c);
    if (rss <= rss_old) return DirectionStep<State>{*c, std::move(state), rss, h, true};
  }
  return DirectionStep<State>{c_old, std::move(current), rss_old, max_halvings, false};
}

}  // namespace ppa
