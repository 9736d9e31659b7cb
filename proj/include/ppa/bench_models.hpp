#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include "ppa/density.hpp"
#include "ppa/error.hpp"
#include "ppa/input_transforms.hpp"
#include "ppa/pce.hpp"

namespace ppa {

/// A physical model with its input distribution.
struct BenchModel {
  std::string name;
  InputSpec input_spec;
  std::function<double(const Vector&)> evaluate;  // physical inputs → QoI
  std::string units;

  int dim() const noexcept { return input_spec.dim(); }

  /// QoI at each row of an N×d matrix of Gaussian-space points.
  Vector evaluate_gaussian(const Matrix& xi) const {
    const Matrix x = from_gaussian_rows(input_spec, xi);
    Vector y(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) y(i) = evaluate(x.row(i).transpose());
    return y;
  }
};

inline constexpr double kBoreholeRadius = 0.1;  // r_w, metres

/// Borehole water flow rate (m³/yr). Inputs in order (r, T_u, H_u, T_l, H_l, L, K_w).
inline double borehole_eval(const Vector& x) {
  require(x.size() == 7, ErrorCode::DimensionMismatch, "borehole expects 7 inputs");
  const double r = x(0), tu = x(1), hu = x(2), tl = x(3), hl = x(4), len = x(5), kw = x(6);
  require(r > kBoreholeRadius, ErrorCode::DomainViolation, "radius of influence must exceed r_w");
  require(tu > 0.0 && tl > 0.0 && kw > 0.0, ErrorCode::DomainViolation,
          "transmissivities and conductivity must be positive");
  const double log_ratio = std::log(r / kBoreholeRadius);
  const double denom =
      log_ratio * (1.0 + 2.0 * len * tu / (log_ratio * kBoreholeRadius * kBoreholeRadius * kw) +
                   tu / tl);
  return 2.0 * M_PI * tu * (hu - hl) / denom;
}

inline InputSpec borehole_spec() {
  InputSpec spec;
  spec.marginals = {
      MarginalSpec::lognormal(7.71, 1.0056, "radius of influence", "m"),
      MarginalSpec::uniform(63070, 115600, "transmissivity of upper aquifer", "m^2/yr"),
      MarginalSpec::uniform(990, 1110, "potentiometric head of upper aquifer", "m"),
      MarginalSpec::uniform(63.1, 116, "transmissivity of lower aquifer", "m^2/yr"),
      MarginalSpec::uniform(700, 820, "potentiometric head of lower aquifer", "m"),
      MarginalSpec::uniform(1120, 1680, "length of borehole", "m"),
      MarginalSpec::uniform(9855, 12045, "hydraulic conductivity of borehole", "m/yr"),
  };
  return spec;
}

inline BenchModel borehole() {
  return BenchModel{"borehole", borehole_spec(), borehole_eval, "m^3/yr"};
}

/// evaluate(ξ) = poly(directions·ξ) on d standard-normal inputs.
inline BenchModel ridge_test_fn(const Matrix& directions, const PceModel& poly,
                                std::string name = "ridge") {
  require(directions.rows() >= 1, ErrorCode::InvalidArgument, "ridge function needs s >= 1");
  require(orthonormality_error(directions) < 1e-10, ErrorCode::NonOrthogonal,
          "ridge directions must be orthonormal");
  require(!poly.projection && poly.basis.dim() == directions.rows(), ErrorCode::DimensionMismatch,
          "polynomial dimension must equal the number of directions");
  require(poly.basis.degree() <= 5, ErrorCode::InvalidArgument, "ridge polynomial degree must be <= 5");
  const int d = static_cast<int>(directions.cols());
  auto eval = [directions, poly](const Vector& xi) {
    const Matrix z = (directions * xi).transpose();
    return evaluate(poly, z)(0);
  };
  return BenchModel{std::move(name), InputSpec::standard_normal(d), std::move(eval), ""};
}

/// N seeded Gaussian-space samples of `model`.
inline Dataset sample_dataset(const BenchModel& model, Eigen::Index n, std::uint64_t seed) {
  Matrix xi = sample_gaussian(n, model.dim(), seed);
  Vector y = model.evaluate_gaussian(xi);
  return Dataset(std::move(xi), std::move(y));
}

/// KDE of the model output over `n_mc` seeded input draws.
inline DensityEstimate reference_density(const BenchModel& model,
                                         Eigen::Index n_mc = kDefaultMonteCarlo,
                                         std::uint64_t seed = 0) {
  require(n_mc >= 10000, ErrorCode::InvalidArgument, "reference density needs n_mc >= 1e4");
  return kde(model.evaluate_gaussian(sample_gaussian(n_mc, model.dim(), seed)));
}

}  // namespace ppa
