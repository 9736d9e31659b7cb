#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ppa/error.hpp"
#include "ppa/input_transforms.hpp"
#include "ppa/linalg.hpp"

namespace ppa {

/// Kernel density estimate tabulated on a grid.
struct DensityEstimate {
  Vector grid;
  Vector values;
  double bandwidth = 0.0;
  Eigen::Index n_samples = 0;
};

inline constexpr Eigen::Index kDefaultGridPoints = 512;
inline constexpr Eigen::Index kDefaultMonteCarlo = 100000;

/// Trapezoid integral of `values` over `grid`.
inline double trapezoid(const Vector& grid, const Vector& values) {
  double s = 0.0;
  for (Eigen::Index i = 1; i < grid.size(); ++i)
    s += 0.5 * (grid(i) - grid(i - 1)) * (values(i) + values(i - 1));
  return s;
}

inline double silverman_bandwidth(const Vector& samples) {
  const double n = static_cast<double>(samples.size());
  const double mean = samples.mean();
  const double var = (samples.array() - mean).square().sum() / (n - 1.0);
  return 1.06 * std::sqrt(var) * std::pow(n, -0.2);
}

/// Gaussian KDE with Silverman's bandwidth. Without a grid, 512 uniform points span
/// [min − 3h, max + 3h]. Kernel contributions beyond 9h are dropped (< 3e-18 relative).
inline DensityEstimate kde(const Vector& samples, std::optional<Vector> grid = std::nullopt) {
  require(samples.size() >= 10, ErrorCode::DegenerateSample, "KDE needs at least 10 samples");
  require(samples.allFinite(), ErrorCode::DegenerateSample, "KDE samples must be finite");
  std::vector<double> sorted(samples.data(), samples.data() + samples.size());
  std::sort(sorted.begin(), sorted.end());
  require(sorted.front() < sorted.back(), ErrorCode::DegenerateSample, "KDE samples have zero variance");
  const double h = silverman_bandwidth(samples);
  require(h > 0.0 && std::isfinite(h), ErrorCode::DegenerateSample,
          "KDE samples have zero variance");

  DensityEstimate out;
  out.bandwidth = h;
  out.n_samples = samples.size();
  if (grid) {
    out.grid = std::move(*grid);
  } else {
    const double lo = sorted.front() - 3.0 * h;
    const double hi = sorted.back() + 3.0 * h;
    out.grid = Vector::LinSpaced(kDefaultGridPoints, lo, hi);
  }

  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * M_PI));
  const double cutoff = 9.0 * h;
  out.values.resize(out.grid.size());
  for (Eigen::Index g = 0; g < out.grid.size(); ++g) {
    const double x = out.grid(g);
    auto first = std::lower_bound(sorted.begin(), sorted.end(), x - cutoff);
    auto last = std::upper_bound(first, sorted.end(), x + cutoff);
    double s = 0.0;
    for (auto it = first; it != last; ++it) {
      const double u = (x - *it) / h;
      s += std::exp(-0.5 * u * u);
    }
    out.values(g) = s * norm;
  }
  return out;
}

/// ‖u − v‖₂ / ‖v‖₂.
inline double relative_l2(const Vector& u, const Vector& v) {
  require(u.size() == v.size(), ErrorCode::DimensionMismatch, "relative_l2 length mismatch");
  const double denom = v.norm();
  require(denom > 0.0, ErrorCode::ZeroReference, "reference vector has zero norm");
  return (u - v).norm() / denom;
}

/// Fraction of samples ≤ each grid point.
inline Vector empirical_cdf(const Vector& samples, const Vector& grid) {
  require(samples.size() >= 1, ErrorCode::InvalidArgument, "empirical CDF needs >= 1 sample");
  std::vector<double> sorted(samples.data(), samples.data() + samples.size());
  std::sort(sorted.begin(), sorted.end());
  Vector out(grid.size());
  const double n = static_cast<double>(sorted.size());
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), grid(g)) - sorted.begin();
    out(g) = static_cast<double>(count) / n;
  }
  return out;
}

/// Draw `n_mc` seeded standard-Gaussian inputs in `dim` dimensions and push them
/// through `predict` (an M×dim matrix → M-vector callable).
template <class Predict>
Vector surrogate_samples(Predict&& predict, int dim, Eigen::Index n_mc, std::uint64_t seed) {
  require(n_mc >= 1000, ErrorCode::InvalidArgument, "surrogate density needs n_mc >= 1000");
  const Matrix xi = sample_gaussian(n_mc, dim, seed);
  Vector y = predict(xi);
  require(y.size() == n_mc, ErrorCode::DimensionMismatch, "predictor returned wrong length");
  return y;
}

/// KDE of surrogate predictions on seeded Gaussian inputs.
template <class Predict>
DensityEstimate surrogate_density(Predict&& predict, int dim, Eigen::Index n_mc = kDefaultMonteCarlo,
                                  std::uint64_t seed = 0, std::optional<Vector> grid = std::nullopt) {
  return kde(surrogate_samples(std::forward<Predict>(predict), dim, n_mc, seed), std::move(grid));
}

/// PDF error of `samples` against a reference density, evaluated on the reference grid.
inline double density_error(const Vector& samples, const DensityEstimate& reference) {
  const DensityEstimate est = kde(samples, reference.grid);
  return relative_l2(est.values, reference.values);
}

}  // namespace ppa
