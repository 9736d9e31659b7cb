#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ppa/bench_models.hpp"
#include "ppa/density.hpp"
#include "ppa/error.hpp"
#include "ppa/input_transforms.hpp"
#include "ppa/linalg.hpp"
#include "ppa/pce.hpp"
#include "ppa/quadrature.hpp"

namespace ppa {

/// Rotation whose first row is the normalized Gaussian (first-order) coefficient vector.
/// Later rows are the coordinate axes ranked by |coefficient| (descending, ties by index),
/// orthogonalized by modified Gram-Schmidt; axes already in the span are skipped.
inline Matrix build_classical_rotation(const Vector& gaussian_coeffs) {
  const Eigen::Index d = gaussian_coeffs.size();
  require(d >= 1, ErrorCode::InvalidArgument, "empty Gaussian coefficient vector");
  const double norm = gaussian_coeffs.norm();
  require(norm >= 1e-12, ErrorCode::DegeneratePilot, "pilot Gaussian coefficients vanish");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(gaussian_coeffs(a)) > std::abs(gaussian_coeffs(b));
  });

  Matrix rows(1, d);
  rows.row(0) = gaussian_coeffs.transpose() / norm;
  std::vector<Vector> candidates;
  for (auto i : order) candidates.push_back(Vector::Unit(d, i));
  return complete_rotation(rows, candidates);
}

/// r-dimensional PCE fitted by least squares on z = stack·ξ.
inline PceModel fit_adapted_regression(const Dataset& data, const ProjectionStack& stack, int p,
                                       double* rss = nullptr) {
  require(stack.d() == data.dim(), ErrorCode::DimensionMismatch, "stack width != data dimension");
  const MultiIndexBasis basis(stack.r(), p);
  PceFit fit = fit_least_squares_points(stack.project(data.inputs), data.outputs, basis, 0.0, stack);
  if (rss) *rss = fit.rss;
  return std::move(fit.model);
}

inline constexpr int kMaxQuadratureDim = 4;

/// Adapted PCE coefficients by tensor Gauss-Hermite projection over η_r, evaluating the
/// physical model at ξ = A_rᵀ η_r (remaining rotated coordinates set to zero).
inline PceModel fit_adapted_quadrature(const std::function<double(const Vector&)>& model_fn,
                                       const InputSpec& spec, const ProjectionStack& stack, int p,
                                       int level) {
  require(stack.r() <= kMaxQuadratureDim, ErrorCode::DimensionTooLarge,
          "quadrature adaptation supports r <= " + std::to_string(kMaxQuadratureDim));
  require(stack.d() == spec.dim(), ErrorCode::DimensionMismatch, "stack width != spec dimension");
  const MultiIndexBasis basis(stack.r(), p);
  const QuadratureRule rule = tensor_gauss_hermite(level, stack.r());
  const Matrix xi = rule.nodes * stack.rows();
  const Matrix x = from_gaussian_rows(spec, xi);
  Vector y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) y(i) = model_fn(x.row(i).transpose());
  const Matrix psi = design_matrix(basis, rule.nodes);
  Vector coeffs = psi.transpose() * rule.weights.cwiseProduct(y);
  return PceModel(basis, std::move(coeffs), stack);
}

inline PceModel fit_adapted_quadrature(const BenchModel& model, const ProjectionStack& stack, int p,
                                       int level) {
  return fit_adapted_quadrature(model.evaluate, model.input_spec, stack, p, level);
}

/// First-order pilot PCE in the original coordinates: mean and Gaussian coefficients.
struct PilotPce {
  double mean = 0.0;
  Vector gaussian;  // length d
};

inline PilotPce fit_pilot(const Dataset& data) {
  const MultiIndexBasis linear(data.dim(), 1);
  const PceFit fit = fit_least_squares(data, linear);
  return {fit.model.coefficients(0), fit.model.coefficients.tail(data.dim())};
}

/// Replace the zero- and first-order coefficients of an adapted model with the pilot's,
/// projected into the adapted coordinates: Ỹ_{e_j} = Σ_i Y_{e_i} A_{ji}.
inline PceModel correct_low_order(const PceModel& adapted, const PilotPce& pilot,
                                  const ProjectionStack& stack) {
  require(adapted.basis.dim() == stack.r(), ErrorCode::DimensionMismatch,
          "adapted basis dimension != stack rows");
  require(pilot.gaussian.size() == stack.d(), ErrorCode::DimensionMismatch,
          "pilot length != stack width");
  Vector coeffs = adapted.coefficients;
  coeffs(0) = pilot.mean;
  const Vector projected = stack.rows() * pilot.gaussian;
  if (adapted.basis.degree() >= 1) {
    for (int j = 0; j < stack.r(); ++j) coeffs(1 + j) = projected(j);
  }
  return PceModel(adapted.basis, std::move(coeffs), stack);
}

enum class DistanceCriterion { Coefficient, Kde };

inline std::string to_string(DistanceCriterion c) {
  return c == DistanceCriterion::Coefficient ? "coefficient" : "kde";
}

/// Coefficients of an r-dim model re-indexed into the (r+1)-dim basis of the same degree.
inline Vector embed_coefficients(const PceModel& model, const MultiIndexBasis& target) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(target.size()));
  for (std::size_t k = 0; k < model.basis.size(); ++k) {
    MultiIndex alpha(static_cast<std::size_t>(target.dim()), 0);
    std::copy(model.basis[k].begin(), model.basis[k].end(), alpha.begin());
    const std::size_t pos = target.find(alpha);
    require(pos < target.size(), ErrorCode::DimensionMismatch, "index not present in target basis");
    out(static_cast<Eigen::Index>(pos)) = model.coefficients(static_cast<Eigen::Index>(k));
  }
  return out;
}

/// Distance between nested r- and (r+1)-dimensional adaptations, relative to the latter.
inline double adaptation_distance(const PceModel& model_r, const PceModel& model_r1,
                                  DistanceCriterion criterion, std::uint64_t seed = 0,
                                  Eigen::Index n_mc = kDefaultMonteCarlo) {
  require(model_r.projection && model_r1.projection, ErrorCode::NonNested,
          "adaptation distance needs projected models");
  const Matrix& a = model_r.projection->rows();
  const Matrix& b = model_r1.projection->rows();
  require(a.cols() == b.cols() && a.rows() <= b.rows() &&
              (a - b.topRows(a.rows())).cwiseAbs().maxCoeff() < 1e-12,
          ErrorCode::NonNested, "stack of the smaller model is not a prefix of the larger");
  if (criterion == DistanceCriterion::Coefficient) {
    require(model_r.basis.degree() == model_r1.basis.degree(), ErrorCode::DimensionMismatch,
            "coefficient distance needs equal degrees");
    return relative_l2(embed_coefficients(model_r, model_r1.basis), model_r1.coefficients);
  }
  const int d = model_r.input_dim;
  auto pred_r = [&](const Matrix& xi) { return evaluate(model_r, xi); };
  auto pred_r1 = [&](const Matrix& xi) { return evaluate(model_r1, xi); };
  const DensityEstimate ref = surrogate_density(pred_r1, d, n_mc, seed);
  return density_error(surrogate_samples(pred_r, d, n_mc, seed), ref);
}

inline constexpr double kAdaptationTolerance = 0.05;

struct AdaptationOptions {
  int p = 3;
  int max_dim = 0;  // 0: up to the input dimension
  DistanceCriterion criterion = DistanceCriterion::Kde;
  double tol = kAdaptationTolerance;
  bool correct = false;  // apply correct_low_order to every adapted model
  std::uint64_t seed = 0;
  Eigen::Index n_mc = kDefaultMonteCarlo;
};

struct AdaptationReport {
  Matrix rotation;
  PilotPce pilot;
  std::vector<PceModel> models;   // models[k] has dimension k + 1
  std::vector<double> distances;  // distances[k] between models[k] and models[k+1]
  int converged_r = 0;
  DistanceCriterion criterion = DistanceCriterion::Kde;

  const PceModel& converged() const { return models.at(static_cast<std::size_t>(converged_r - 1)); }
};

/// Classical Gaussian adaptation from data: pilot → rotation → regression-fitted adapted
/// PCEs of increasing dimension until successive ones agree within `tol`.
inline AdaptationReport classical_adaptation(const Dataset& data, const AdaptationOptions& opts = {}) {
  const int d = data.dim();
  const int max_dim = opts.max_dim > 0 ? std::min(opts.max_dim, d) : d;
  AdaptationReport report;
  report.criterion = opts.criterion;
  report.pilot = fit_pilot(data);
  report.rotation = build_classical_rotation(report.pilot.gaussian);

  for (int r = 1; r <= max_dim; ++r) {
    const auto terms = binomial(static_cast<std::size_t>(r + opts.p), static_cast<std::size_t>(opts.p));
    if (data.size() < static_cast<Eigen::Index>(terms) + 5) break;
    const ProjectionStack stack(report.rotation.topRows(r));
    PceModel m = fit_adapted_regression(data, stack, opts.p);
    if (opts.correct) m = correct_low_order(m, report.pilot, stack);
    report.models.push_back(std::move(m));
    if (report.models.size() >= 2) {
      const auto k = report.models.size();
      const double dist = adaptation_distance(report.models[k - 2], report.models[k - 1],
                                              opts.criterion, opts.seed, opts.n_mc);
      report.distances.push_back(dist);
      if (dist < opts.tol) {
        report.converged_r = r - 1;
        return report;
      }
    }
  }
  require(!report.models.empty(), ErrorCode::InsufficientData,
          "not enough samples for a 1-dimensional adaptation");
  report.converged_r = static_cast<int>(report.models.size());
  return report;
}

struct SoaOptions {
  int budget = 200;             // surrogate-sample refits
  Eigen::Index n_samples = 2000;
  double initial_step = 0.25;
  double min_step = 1e-6;
};

struct SoaResult {
  Matrix rotation;
  std::vector<double> trace;  // best objective after each refit (non-increasing)
  bool improved = false;
};

/// Rotation update for sequentially optimized adaptation: search the unit sphere for the
/// first row b whose 1-dimensional adaptation best reproduces `current` (an r-dim adapted
/// model) on seeded surrogate samples; remaining rows from Gram-Schmidt on the parent rows.
inline SoaResult soa_update_rotation(const PceModel& current, const Matrix& parent_rotation, int p,
                                     std::uint64_t seed, const SoaOptions& opts = {}) {
  require(current.projection.has_value(), ErrorCode::InvalidArgument,
          "SOA needs an adapted model with a projection stack");
  const int d = current.input_dim;
  require(parent_rotation.rows() == d && parent_rotation.cols() == d, ErrorCode::DimensionMismatch,
          "parent rotation must be d×d");
  SoaResult out;
  out.rotation = parent_rotation;
  if (opts.budget <= 0) return out;

  const Matrix xi = sample_gaussian(opts.n_samples, d, seed);
  const Vector target = evaluate(current, xi);
  const double target_norm = target.norm();
  require(target_norm > 0.0, ErrorCode::ZeroReference, "surrogate is identically zero");
  const MultiIndexBasis line(1, p);
  auto objective = [&](const Vector& b) {
    return std::sqrt(fit_least_squares_robust(xi * b, target, line).rss) / target_norm;
  };

  Vector best = parent_rotation.row(0).transpose();
  double best_obj = objective(best);
  int used = 1;
  out.trace.push_back(best_obj);
  double step = opts.initial_step;
  while (used < opts.budget && step > opts.min_step) {
    bool moved = false;
    for (int k = 0; k < d && used < opts.budget; ++k) {
      for (double sign : {1.0, -1.0}) {
        if (used >= opts.budget) break;
        Vector cand = best + sign * step * Vector::Unit(d, k);
        cand.normalize();
        const double obj = objective(cand);
        ++used;
        if (obj < best_obj) {
          best_obj = obj;
          best = std::move(cand);
          moved = true;
          out.improved = true;
        }
        out.trace.push_back(best_obj);
      }
    }
    if (!moved) step *= 0.5;
  }
  if (!out.improved) return out;

  Matrix first(1, d);
  first.row(0) = best.transpose();
  std::vector<Vector> candidates;
  for (int i = 0; i < d; ++i) candidates.push_back(parent_rotation.row(i).transpose());
  out.rotation = complete_rotation(first, candidates);
  return out;
}

}  // namespace ppa
