#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ppa/error.hpp"
#include "ppa/gauss_newton.hpp"
#include "ppa/linalg.hpp"
#include "ppa/pce.hpp"

namespace ppa {

/// One additive term f_j(c_jᵀx): unit direction plus a univariate PCE in t = c_jᵀx.
struct PprStage {
  Vector direction;
  PceModel smooth;  // 1-dimensional, no projection
};

struct PprModel {
  double mean = 0.0;
  int p = 0;
  int input_dim = 0;
  std::vector<PprStage> stages;
  std::vector<double> fit_trace;  // RSS of the mean-only model, then after each stage
  std::vector<double> loo_trace;  // matching leave-one-out PRESS of each accepted stage
  std::uint64_t seed = 0;
  std::string stopped_reason;
};

struct PprOptions {
  int p = 3;
  int max_stages = 10;
  double tol = 0.1;
  std::uint64_t seed = 0;
  StageCriterion criterion = StageCriterion::LeaveOneOut;
  InnerLoopOptions inner;
};

/// Stages whose residual RSS is at most this fraction of the total sum of squares are
/// treated as exact fits; no further stage is attempted.
inline constexpr double kExactFitFraction = 1e-10;

inline Vector ppr_stage_contribution(const PprStage& stage, const Matrix& points) {
  const Matrix t = points * stage.direction;
  return evaluate_basis_coords(stage.smooth.basis, stage.smooth.coefficients, t);
}

inline Vector ppr_predict(const PprModel& model, const Matrix& points) {
  require(points.cols() == model.input_dim, ErrorCode::DimensionMismatch,
          "points have " + std::to_string(points.cols()) + " columns, PPR model expects " +
              std::to_string(model.input_dim));
  Vector out = Vector::Constant(points.rows(), model.mean);
  for (const auto& stage : model.stages) out += ppr_stage_contribution(stage, points);
  return out;
}

namespace detail {

/// Unit direction from the first-order PCE coefficients of `target`, orthogonal to
/// `fixed`; seeded random fallback when that is degenerate or cannot be fitted.
inline Vector initial_direction(const Matrix& x, const Vector& target, const Matrix& fixed,
                                std::uint64_t seed) {
  const int d = static_cast<int>(x.cols());
  const MultiIndexBasis linear(d, 1);
  if (x.rows() >= static_cast<Eigen::Index>(linear.size()) + 5) {
    const PceFit fit = fit_least_squares_robust(x, target, linear);
    const Vector slope = fit.model.coefficients.tail(d);
    if (slope.norm() >= 1e-12) {
      if (auto v = orthogonalize(slope, fixed, 1e-10)) return *v;
    }
  }
  GaussianStream normal(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v(i) = normal();
    if (auto u = orthogonalize(v, fixed, 1e-6)) return *u;
  }
  fail(ErrorCode::InvalidArgument, "no direction orthogonal to the fixed projections");
}

}  // namespace detail

/// One Gauss-Newton direction update for a univariate smooth `f` against `target`.
/// Returns the damped direction; `c_old` comes back unchanged if no step helped.
inline Vector gauss_newton_direction_update(const Matrix& x, const Vector& target,
                                            const PceModel& f, const Vector& c_old,
                                            const InnerLoopOptions& opts = {}) {
  require(f.basis.dim() == 1 && !f.projection, ErrorCode::InvalidArgument,
          "smooth function must be a univariate PCE");
  const Matrix t = x * c_old;
  const Vector fitted = evaluate_basis_coords(f.basis, f.coefficients, t);
  const Vector deriv = gradient_matrix(f.basis, t, 0) * f.coefficients;
  const Matrix none(0, x.cols());
  const Vector proposal =
      gauss_newton_direction(x, c_old, target - fitted, deriv, none, opts.weight_floor);
  const double rss_old = (target - fitted).squaredNorm();
  auto refit = [&](const Vector& c) {
    PceFit fit = fit_least_squares_robust(x * c, target, f.basis);
    return std::pair<PceModel, double>{std::move(fit.model), fit.rss};
  };
  return damped_direction_step(c_old, f, rss_old, proposal, none, opts.max_halvings, refit)
      .direction;
}

struct PprFit {
  PprModel model;
  Vector fitted;  // training predictions, accumulated exactly as ppr_predict does
};

/// Stage-wise greedy projection pursuit regression with univariate PCE smooths.
inline PprFit fit_ppr(const Dataset& data, const PprOptions& opts = {}) {
  data.validate();
  require(opts.p >= 1, ErrorCode::InvalidArgument, "PPR degree must be >= 1");
  require(opts.max_stages >= 0, ErrorCode::InvalidArgument, "max_stages must be >= 0");
  const Eigen::Index n = data.size();
  require(n >= opts.p + 6, ErrorCode::InsufficientData,
          "PPR needs at least " + std::to_string(opts.p + 6) + " samples");
  const Matrix& x = data.inputs;
  const Vector& y = data.outputs;
  const MultiIndexBasis smooth_basis(1, opts.p);
  const Matrix none(0, x.cols());

  PprModel model;
  model.p = opts.p;
  model.input_dim = data.dim();
  model.seed = opts.seed;
  model.mean = y.mean();
  Vector current = Vector::Constant(n, model.mean);
  double rss = (y - current).squaredNorm();
  const double tss = rss;
  model.fit_trace.push_back(rss);
  double loo = constant_loo(tss, n);
  model.loo_trace.push_back(loo);
  model.stopped_reason = "max_stages";

  for (int j = 0; j < opts.max_stages; ++j) {
    if (rss <= kExactFitFraction * tss || rss == 0.0) {
      model.stopped_reason = "exact_fit";
      break;
    }
    const Vector nu = y - current;
    Vector c = detail::initial_direction(x, nu, none, opts.seed + static_cast<std::uint64_t>(j));
    PceFit fit = fit_least_squares_robust(x * c, nu, smooth_basis);
    PceModel f = std::move(fit.model);
    double stage_rss = fit.rss;

    for (int it = 0; it < opts.inner.max_iterations; ++it) {
      const Matrix t = x * c;
      const Vector fv = evaluate_basis_coords(f.basis, f.coefficients, t);
      const Vector deriv = gradient_matrix(f.basis, t, 0) * f.coefficients;
      Vector proposal;
      try {
        proposal = gauss_newton_direction(x, c, nu - fv, deriv, none, opts.inner.weight_floor);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::AllWeightsDegenerate) throw;
        break;
      }
      auto refit = [&](const Vector& cand) {
        PceFit r = fit_least_squares_robust(x * cand, nu, smooth_basis);
        return std::pair<PceModel, double>{std::move(r.model), r.rss};
      };
      auto step = damped_direction_step(c, f, stage_rss, proposal, none, opts.inner.max_halvings, refit);
      if (!step.moved) break;
      const double align = 1.0 - std::abs(step.direction.dot(c));
      const double rel = stage_rss > 0.0 ? (stage_rss - step.rss) / stage_rss : 0.0;
      c = std::move(step.direction);
      f = std::move(step.state);
      stage_rss = step.rss;
      if (align < opts.inner.direction_tol || rel < opts.inner.rss_tol) break;
    }

    // PRESS of the smooth along the final direction, against the stage's target.
    const PceFit refit = fit_least_squares_robust(x * c, nu, smooth_basis);
    const double stage_loo = std::isfinite(refit.loo) ? refit.loo : stage_rss;
    const bool use_loo = opts.criterion == StageCriterion::LeaveOneOut;
    const double before = use_loo ? loo : rss;
    const double after = use_loo ? stage_loo : stage_rss;
    const double improvement = before > 0.0 ? (before - after) / before : 0.0;
    if (!(improvement >= opts.tol)) {
      model.stopped_reason = model.stages.empty() ? std::string(to_string(ErrorCode::NoImprovingDirection))
                                                  : "converged";
      break;
    }
    PprStage stage{std::move(c), std::move(f)};
    current += ppr_stage_contribution(stage, x);
    model.stages.push_back(std::move(stage));
    rss = (y - current).squaredNorm();
    model.fit_trace.push_back(rss);
    loo = stage_loo;
    model.loo_trace.push_back(loo);
  }
  return PprFit{std::move(model), std::move(current)};
}

}  // namespace ppa
