#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ppa/error.hpp"
#include "ppa/linalg.hpp"
#include "ppa/random.hpp"

namespace ppa {

enum class MarginalKind { Lognormal, Uniform, Normal };

inline std::string to_string(MarginalKind kind) {
  switch (kind) {
    case MarginalKind::Lognormal: return "lognormal";
    case MarginalKind::Uniform: return "uniform";
    case MarginalKind::Normal: return "normal";
  }
  return "unknown";
}

inline MarginalKind parse_marginal_kind(const std::string& name) {
  if (name == "lognormal") return MarginalKind::Lognormal;
  if (name == "uniform") return MarginalKind::Uniform;
  if (name == "normal") return MarginalKind::Normal;
  fail(ErrorCode::Parse, "unknown marginal kind '" + name + "'");
}

/// One independent physical input. Parameter meaning depends on `kind`:
/// lognormal (log-scale mean, log-scale std), uniform (lower, upper), normal (mean, std).
struct MarginalSpec {
  MarginalKind kind = MarginalKind::Normal;
  double first = 0.0;
  double second = 1.0;
  std::string description;
  std::string units;

  static MarginalSpec lognormal(double mu, double sigma, std::string desc = {}, std::string units = {}) {
    return make(MarginalKind::Lognormal, mu, sigma, std::move(desc), std::move(units));
  }
  static MarginalSpec uniform(double a, double b, std::string desc = {}, std::string units = {}) {
    return make(MarginalKind::Uniform, a, b, std::move(desc), std::move(units));
  }
  static MarginalSpec normal(double m, double s, std::string desc = {}, std::string units = {}) {
    return make(MarginalKind::Normal, m, s, std::move(desc), std::move(units));
  }

  void validate() const {
    require(std::isfinite(first) && std::isfinite(second), ErrorCode::InvalidArgument,
            "marginal parameters must be finite");
    if (kind == MarginalKind::Uniform) {
      require(second > first, ErrorCode::InvalidArgument, "uniform needs b > a");
    } else {
      require(second > 0.0, ErrorCode::InvalidArgument, to_string(kind) + " needs positive scale");
    }
  }

  double from_gaussian(double xi) const {
    switch (kind) {
      case MarginalKind::Lognormal: return std::exp(first + second * xi);
      case MarginalKind::Uniform: return first + (second - first) * normal_cdf(xi);
      case MarginalKind::Normal: return first + second * xi;
    }
    return 0.0;
  }

  double to_gaussian(double x) const {
    switch (kind) {
      case MarginalKind::Lognormal:
        require(x > 0.0, ErrorCode::OutOfSupport, "lognormal value must be positive");
        return (std::log(x) - first) / second;
      case MarginalKind::Uniform:
        require(x >= first && x <= second, ErrorCode::OutOfSupport,
                "uniform value " + std::to_string(x) + " outside [" + std::to_string(first) +
                    ", " + std::to_string(second) + "]");
        return normal_quantile((x - first) / (second - first));
      case MarginalKind::Normal: return (x - first) / second;
    }
    return 0.0;
  }

  /// CDF of the physical marginal.
  double cdf(double x) const {
    switch (kind) {
      case MarginalKind::Lognormal: return x <= 0.0 ? 0.0 : normal_cdf((std::log(x) - first) / second);
      case MarginalKind::Uniform:
        return x <= first ? 0.0 : (x >= second ? 1.0 : (x - first) / (second - first));
      case MarginalKind::Normal: return normal_cdf((x - first) / second);
    }
    return 0.0;
  }

 private:
  static MarginalSpec make(MarginalKind k, double a, double b, std::string desc, std::string units) {
    MarginalSpec m{k, a, b, std::move(desc), std::move(units)};
    m.validate();
    return m;
  }
};

/// Ordered list of mutually independent marginals.
struct InputSpec {
  std::vector<MarginalSpec> marginals;

  int dim() const noexcept { return static_cast<int>(marginals.size()); }

  void validate() const {
    require(!marginals.empty(), ErrorCode::InvalidArgument, "input spec needs >= 1 marginal");
    for (const auto& m : marginals) m.validate();
  }

  static InputSpec standard_normal(int d) {
    InputSpec spec;
    for (int i = 0; i < d; ++i)
      spec.marginals.push_back(MarginalSpec::normal(0.0, 1.0, "xi_" + std::to_string(i + 1)));
    return spec;
  }
};

inline Vector from_gaussian(const InputSpec& spec, const Vector& xi) {
  require(xi.size() == spec.dim(), ErrorCode::DimensionMismatch, "xi length != spec dimension");
  Vector x(xi.size());
  for (Eigen::Index i = 0; i < xi.size(); ++i)
    x(i) = spec.marginals[static_cast<std::size_t>(i)].from_gaussian(xi(i));
  return x;
}

inline Vector to_gaussian(const InputSpec& spec, const Vector& x) {
  require(x.size() == spec.dim(), ErrorCode::DimensionMismatch, "x length != spec dimension");
  Vector xi(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    xi(i) = spec.marginals[static_cast<std::size_t>(i)].to_gaussian(x(i));
  return xi;
}

/// Row-wise map of an N×d Gaussian-space matrix to physical space.
inline Matrix from_gaussian_rows(const InputSpec& spec, const Matrix& xi) {
  require(xi.cols() == spec.dim(), ErrorCode::DimensionMismatch, "column count != spec dimension");
  Matrix x(xi.rows(), xi.cols());
  for (Eigen::Index j = 0; j < xi.cols(); ++j) {
    const auto& m = spec.marginals[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < xi.rows(); ++i) x(i, j) = m.from_gaussian(xi(i, j));
  }
  return x;
}

inline Matrix to_gaussian_rows(const InputSpec& spec, const Matrix& x) {
  require(x.cols() == spec.dim(), ErrorCode::DimensionMismatch, "column count != spec dimension");
  Matrix xi(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto& m = spec.marginals[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < x.rows(); ++i) xi(i, j) = m.to_gaussian(x(i, j));
  }
  return xi;
}

/// n×d i.i.d. standard normal matrix, filled row by row from one GaussianStream.
inline Matrix sample_gaussian(Eigen::Index n, int d, std::uint64_t seed) {
  require(n >= 1, ErrorCode::InvalidArgument, "sample count must be >= 1");
  require(d >= 1, ErrorCode::InvalidArgument, "sample dimension must be >= 1");
  GaussianStream normal(seed);
  Matrix out(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = normal();
  return out;
}

}  // namespace ppa
