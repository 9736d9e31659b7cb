#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ppa/error.hpp"
#include "ppa/gauss_newton.hpp"
#include "ppa/linalg.hpp"
#include "ppa/pce.hpp"
#include "ppa/ppr.hpp"

namespace ppa {

struct PpaStageTrace {
  int r = 0;
  double initial_rss = 0.0;  // after the first g_r fit, before any direction update
  double rss = 0.0;          // at inner-loop exit
  double loo = 0.0;          // PRESS of g refitted on the final stack
  std::vector<double> inner_rss;
  bool accepted = false;
};

/// Orthonormal projection stack with one multivariate PCE over the projected variables.
struct PpaModel {
  ProjectionStack stack;
  PceModel g;  // carries `stack` as its projection
  std::vector<PpaStageTrace> fit_trace;
  std::uint64_t seed = 0;
  std::string stopped_reason;

  int r() const noexcept { return stack.r(); }
  int input_dim() const noexcept { return stack.d(); }
};

struct PpaOptions {
  int p = 3;
  int max_dim = 0;  // 0: no limit beyond the input dimension
  double tol = 0.1;
  std::uint64_t seed = 0;
  StageCriterion criterion = StageCriterion::LeaveOneOut;
  InnerLoopOptions inner;
};

inline Vector ppa_predict(const PpaModel& model, const Matrix& points) {
  require(points.cols() == model.input_dim(), ErrorCode::DimensionMismatch,
          "points have " + std::to_string(points.cols()) + " columns, PPA model expects " +
              std::to_string(model.input_dim()));
  return evaluate(model.g, points);
}

struct PpaInnerResult {
  Vector direction;
  PceModel g;  // r-dimensional, evaluated on z = [fixed; direction]·x
  double rss = 0.0;
  bool moved = false;
};

/// Stack `fixed` (k×d) with `c` as its last row.
inline Matrix append_row(const Matrix& fixed, const Vector& c) {
  Matrix out(fixed.rows() + 1, fixed.cols());
  out.topRows(fixed.rows()) = fixed;
  out.row(fixed.rows()) = c.transpose();
  return out;
}

/// One alternating step of stage r: Gauss-Newton update of the newest projection with the
/// earlier rows held fixed, then a least-squares refit of g. Returned RSS never exceeds the
/// incoming one. Throws DegenerateDerivative when ∂g/∂z_r is negligible at every point.
inline PpaInnerResult ppa_stage_inner(const Dataset& data, const Matrix& stack_fixed,
                                      const Vector& c_r, const PceModel& g,
                                      const InnerLoopOptions& opts = {}) {
  const int r = static_cast<int>(stack_fixed.rows()) + 1;
  require(g.basis.dim() == r && !g.projection, ErrorCode::DimensionMismatch,
          "g must be an r-dimensional PCE in projected coordinates");
  require(c_r.size() == data.dim() && stack_fixed.cols() == data.dim(),
          ErrorCode::DimensionMismatch, "projection width != data dimension");
  const Matrix& x = data.inputs;
  const Vector& y = data.outputs;

  const Matrix z_old = x * append_row(stack_fixed, c_r).transpose();
  const Vector fitted = evaluate_basis_coords(g.basis, g.coefficients, z_old);
  const Vector deriv = gradient_matrix(g.basis, z_old, r - 1) * g.coefficients;
  const double rss_old = (y - fitted).squaredNorm();

  Vector proposal;
  try {
    proposal = gauss_newton_direction(x, c_r, y - fitted, deriv, stack_fixed, opts.weight_floor);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::AllWeightsDegenerate)
      fail(ErrorCode::DegenerateDerivative, "∂g/∂z_r vanishes at every sample");
    throw;
  }
  auto refit = [&](const Vector& c) {
    PceFit fit = fit_least_squares_robust(x * append_row(stack_fixed, c).transpose(), y, g.basis);
    return std::pair<PceModel, double>{std::move(fit.model), fit.rss};
  };
  auto step = damped_direction_step(c_r, g, rss_old, proposal, stack_fixed, opts.max_halvings, refit);
  return PpaInnerResult{std::move(step.direction), std::move(step.state), step.rss, step.moved};
}

struct PpaFit {
  PpaModel model;
  Vector fitted;
};

/// Projection pursuit adaptation: grow an orthonormal projection stack one row at a time,
/// refitting an r-dimensional PCE from scratch at each stage and alternating it with
/// Gauss-Newton updates of the newest row.
inline PpaFit fit_ppa(const Dataset& data, const PpaOptions& opts = {}) {
  data.validate();
  require(opts.p >= 1, ErrorCode::InvalidArgument, "PPA degree must be >= 1");
  const int d = data.dim();
  const Eigen::Index n = data.size();
  const int max_dim = opts.max_dim > 0 ? std::min(opts.max_dim, d) : d;
  const auto gate = [&](int r) {
    return n >= static_cast<Eigen::Index>(binomial(static_cast<std::size_t>(r + opts.p),
                                                   static_cast<std::size_t>(opts.p))) + 5;
  };
  require(gate(1), ErrorCode::InsufficientData,
          "PPA needs at least " + std::to_string(opts.p + 6) + " samples");

  const Matrix& x = data.inputs;
  const Vector& y = data.outputs;
  const double tss = (y.array() - y.mean()).square().sum();

  Matrix fixed(0, d);
  std::vector<PpaStageTrace> trace;
  std::optional<PceFit> best;  // accepted g, in projected coordinates
  Matrix best_rows;
  Vector best_fitted;
  double rss_prev = tss;
  double loo_prev = constant_loo(tss, n);
  Vector residual = y.array() - y.mean();
  std::string reason = "max_dim";

  for (int r = 1; r <= max_dim; ++r) {
    if (!gate(r)) {
      reason = "sample_gate";
      break;
    }
    if (best && (rss_prev <= kExactFitFraction * tss || rss_prev == 0.0)) {
      reason = "exact_fit";
      break;
    }
    const MultiIndexBasis basis(r, opts.p);
    Vector c = detail::initial_direction(x, residual, fixed, opts.seed + static_cast<std::uint64_t>(r));
    PceFit fit = fit_least_squares_robust(x * append_row(fixed, c).transpose(), y, basis);
    PceModel g = std::move(fit.model);
    double rss = fit.rss;

    PpaStageTrace st;
    st.r = r;
    st.initial_rss = rss;
    for (int it = 0; it < opts.inner.max_iterations; ++it) {
      PpaInnerResult step;
      try {
        step = ppa_stage_inner(data, fixed, c, g, opts.inner);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateDerivative) throw;
        break;
      }
      if (!step.moved) break;
      const double align = 1.0 - std::abs(step.direction.dot(c));
      const double rel = rss > 0.0 ? (rss - step.rss) / rss : 0.0;
      c = std::move(step.direction);
      g = std::move(step.g);
      rss = step.rss;
      st.inner_rss.push_back(rss);
      if (align < opts.inner.direction_tol || rel < opts.inner.rss_tol) break;
    }
    st.rss = rss;
    const Matrix stage_rows = append_row(fixed, c);
    const PceFit refit = fit_least_squares_robust(x * stage_rows.transpose(), y, basis);
    st.loo = std::isfinite(refit.loo) ? refit.loo : rss;

    const bool use_loo = opts.criterion == StageCriterion::LeaveOneOut;
    const double before = use_loo ? loo_prev : rss_prev;
    const double after = use_loo ? st.loo : rss;
    const double improvement = before > 0.0 ? (before - after) / before : 0.0;
    const bool accept = !best || improvement >= opts.tol;
    st.accepted = accept;
    trace.push_back(st);
    if (!accept) {
      reason = "converged";
      break;
    }
    fixed = stage_rows;
    const Matrix z = x * fixed.transpose();
    best_fitted = evaluate_basis_coords(g.basis, g.coefficients, z);
    residual = y - best_fitted;
    best = PceFit{std::move(g), rss, 0};
    best_rows = fixed;
    rss_prev = rss;
    loo_prev = st.loo;
  }

  ProjectionStack stack(best_rows);
  PpaModel model;
  model.g = PceModel(best->model.basis, best->model.coefficients, stack);
  model.stack = std::move(stack);
  model.fit_trace = std::move(trace);
  model.seed = opts.seed;
  model.stopped_reason = reason;
  return PpaFit{std::move(model), std::move(best_fitted)};
}

/// Re-express a PPA model as a full d-dimensional PCE in the original Gaussian inputs.
/// The stack is completed to a rotation A with seeded random rows; g is zero-padded into
/// J_{d,p} on the leading coordinates and transferred through Aᵀ.
inline PceModel ppa_to_original(const PpaModel& model, std::uint64_t seed = 0) {
  const int r = model.r();
  const int d = model.input_dim();
  require(r <= 4, ErrorCode::DimensionTooLarge, "transfer to original space supports r <= 4");
  const Matrix rotation = complete_rotation_random(model.stack.rows(), seed);
  const MultiIndexBasis full(d, model.g.basis.degree());
  Vector padded = Vector::Zero(static_cast<Eigen::Index>(full.size()));
  for (std::size_t k = 0; k < model.g.basis.size(); ++k) {
    MultiIndex alpha(static_cast<std::size_t>(d), 0);
    std::copy(model.g.basis[k].begin(), model.g.basis[k].end(), alpha.begin());
    padded(static_cast<Eigen::Index>(full.find(alpha))) = model.g.coefficients(static_cast<Eigen::Index>(k));
  }
  const PceModel rotated(full, std::move(padded));
  return transfer_coefficients(rotated, rotation.transpose(), full);
}

}  // namespace ppa
