#include <cmath>

#include <gtest/gtest.h>

#include "ppa/bench_models.hpp"
#include "ppa/io.hpp"
#include "ppa/pce.hpp"

using namespace ppa;

namespace {

Matrix rotation2(double angle) {
  Matrix a(2, 2);
  a << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return a;
}

Vector random_coeffs(std::size_t n, std::uint64_t seed) {
  GaussianStream rng(seed);
  Vector c(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = rng();
  return c;
}

// Haar-ish random rotation: QR of a Gaussian matrix with the sign of R's diagonal fixed.
Matrix random_rotation(int d, std::uint64_t seed) {
  const Matrix g = sample_gaussian(d, d, seed);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace

TEST(FitLeastSquares, ExactLinearRecovery) {
  const Matrix x = sample_gaussian(50, 2, 3);
  const Vector y = (2.0 + 3.0 * x.col(0).array()).matrix();
  const PceFit fit = fit_least_squares(Dataset(x, y), enumerate_basis(2, 1));
  EXPECT_NEAR(fit.model.coefficients(0), 2.0, 1e-10);
  EXPECT_NEAR(fit.model.coefficients(1), 3.0, 1e-10);
  EXPECT_NEAR(fit.model.coefficients(2), 0.0, 1e-10);

  const Vector at = evaluate(fit.model, (Matrix(1, 2) << 1.0, 9.0).finished());
  EXPECT_NEAR(at(0), 5.0, 1e-9);
}

TEST(FitLeastSquares, HermiteReexpansion) {
  const Matrix x = sample_gaussian(100, 1, 4);
  const Vector y = x.col(0).array().square().matrix();
  const PceFit fit = fit_least_squares(Dataset(x, y), enumerate_basis(1, 2));
  EXPECT_NEAR(fit.model.coefficients(0), 1.0, 1e-10);
  EXPECT_NEAR(fit.model.coefficients(1), 0.0, 1e-10);
  EXPECT_NEAR(fit.model.coefficients(2), std::sqrt(2.0), 1e-10);
}

TEST(FitLeastSquares, BoreholeFirstOrderSigns) {
  const Dataset data = sample_dataset(borehole(), 100, 5);
  const PceFit fit = fit_least_squares(data, enumerate_basis(7, 1));
  // Coordinates: r, T_u, H_u, T_l, H_l, L, K_w. Linear term of coordinate i sits at 1 + i.
  EXPECT_GT(fit.model.coefficients(1 + 2), 0.0);  // H_u
  EXPECT_LT(fit.model.coefficients(1 + 5), 0.0);  // L
}

TEST(FitLeastSquares, RecoversNoiselessPce) {
  const auto basis = enumerate_basis(3, 3);
  const Vector truth = random_coeffs(basis.size(), 8);
  const Matrix x = sample_gaussian(static_cast<Eigen::Index>(basis.size()) + 5, 3, 9);
  const Vector y = evaluate(PceModel(basis, truth), x);
  const PceFit fit = fit_least_squares(Dataset(x, y), basis);
  EXPECT_LT((fit.model.coefficients - truth).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(fit.rss, 1e-16);
}

TEST(FitLeastSquares, SampleGateAndRank) {
  const auto basis = enumerate_basis(2, 2);  // 6 terms
  const Matrix x = sample_gaussian(10, 2, 1);
  try {
    fit_least_squares(Dataset(x, x.col(0)), basis);
    FAIL() << "expected InsufficientData";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
  // Every point on the line ξ₂ = ξ₁ makes the design rank deficient.
  Matrix dup = sample_gaussian(30, 2, 2);
  dup.col(1) = dup.col(0);
  try {
    fit_least_squares(Dataset(dup, dup.col(0)), basis);
    FAIL() << "expected RankDeficient";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RankDeficient);
  }
  // The ridge fallback still fits the data.
  const PceFit f = fit_least_squares_robust(dup, dup.col(0), basis);
  EXPECT_LT(f.rss / 30.0, 1e-10);
  // A ridge fit is allowed below the sample gate.
  EXPECT_NO_THROW(fit_least_squares(Dataset(x, x.col(0)), basis, 1e-3));
}

TEST(FitLeastSquares, LeaveOneOutMatchesBruteForce) {
  const auto basis = enumerate_basis(2, 2);
  const Matrix x = sample_gaussian(25, 2, 17);
  const Vector y = (x.col(0).array().sin() + 0.3 * x.col(1).array().cube()).matrix();
  const PceFit full = fit_least_squares_points(x, y, basis);
  double press = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Matrix xi(x.rows() - 1, 2);
    Vector yi(x.rows() - 1);
    for (Eigen::Index j = 0, k = 0; j < x.rows(); ++j) {
      if (j == i) continue;
      xi.row(k) = x.row(j);
      yi(k++) = y(j);
    }
    const PceFit f = fit_least_squares_points(xi, yi, basis);
    const double e = y(i) - evaluate_basis_coords(basis, f.model.coefficients, x.row(i))(0);
    press += e * e;
  }
  EXPECT_NEAR(full.loo, press, 1e-9 * press);
  EXPECT_GT(full.loo, full.rss);
}

TEST(Evaluate, ConstantAndMismatch) {
  const auto basis = enumerate_basis(3, 2);
  Vector c = Vector::Zero(static_cast<Eigen::Index>(basis.size()));
  c(0) = 4.25;
  const PceModel m(basis, c);
  const Vector v = evaluate(m, sample_gaussian(7, 3, 1));
  for (Eigen::Index i = 0; i < v.size(); ++i) EXPECT_EQ(v(i), 4.25);
  EXPECT_THROW(evaluate(m, Matrix::Zero(2, 2)), Error);
}

TEST(Evaluate, SerializationRoundTripIsBitIdentical) {
  const auto basis = enumerate_basis(3, 3);
  io::StoredModel sm;
  sm.kind = "pce";
  sm.model = PceModel(basis, random_coeffs(basis.size(), 21) / 3.0);
  const std::string text = io::serialize_model(sm);
  const io::StoredModel back = io::model_from_json(io::json::parse(text));
  const Matrix x = sample_gaussian(50, 3, 22);
  const Vector a = sm.predict(x), b = back.predict(x);
  for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_EQ(a(i), b(i));
  EXPECT_EQ(io::serialize_model(back), text);
}

TEST(Moments, FromCoefficients) {
  const PceModel m(enumerate_basis(2, 1), (Vector(3) << 2.0, 3.0, 0.0).finished());
  EXPECT_DOUBLE_EQ(moments(m).mean, 2.0);
  EXPECT_DOUBLE_EQ(moments(m).variance, 9.0);
  const PceModel z(enumerate_basis(2, 2), Vector::Zero(6));
  EXPECT_EQ(moments(z).mean, 0.0);
  EXPECT_EQ(moments(z).variance, 0.0);
}

TEST(Moments, MatchMonteCarlo) {
  const auto basis = enumerate_basis(3, 3);
  const PceModel m(basis, random_coeffs(basis.size(), 31));
  const Vector s = evaluate(m, sample_gaussian(100000, 3, 32));
  const double mean = s.mean();
  const double var = (s.array() - mean).square().sum() / (s.size() - 1);
  const double se = std::sqrt(var / s.size());
  EXPECT_NEAR(mean, moments(m).mean, 3 * se);
  EXPECT_NEAR(var, moments(m).variance, 0.05 * moments(m).variance);
}

TEST(Transfer, IdentityRotation) {
  const auto basis = enumerate_basis(3, 3);
  const Matrix m = inner_product_matrix(basis, basis, Matrix::Identity(3, 3));
  EXPECT_LT((m - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff(), 1e-10);
  const PceModel model(basis, random_coeffs(basis.size(), 3));
  const PceModel same = transfer_coefficients(model, Matrix::Identity(3, 3), basis);
  EXPECT_LT((same.coefficients - model.coefficients).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Transfer, SwapMovesLinearCoefficient) {
  const auto basis = enumerate_basis(2, 1);
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  const PceModel model(basis, (Vector(3) << 0.5, 2.0, 0.0).finished());
  const PceModel t = transfer_coefficients(model, swap, basis);
  EXPECT_NEAR(t.coefficients(0), 0.5, 1e-14);
  EXPECT_NEAR(t.coefficients(1), 0.0, 1e-14);
  EXPECT_NEAR(t.coefficients(2), 2.0, 1e-14);
}

TEST(Transfer, FirstOrderCoefficientsRotateLinearly) {
  const int d = 4;
  const auto basis = enumerate_basis(d, 1);
  const PceModel model(basis, random_coeffs(basis.size(), 41));
  const Matrix a = random_rotation(d, 42);
  const PceModel t = transfer_coefficients(model, a, basis);
  const Vector expected = a * model.coefficients.tail(d);
  EXPECT_LT((t.coefficients.tail(d) - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(t.coefficients(0), model.coefficients(0), 1e-12);
}

TEST(Transfer, RoundTrip45Degrees) {
  const auto basis = enumerate_basis(2, 2);
  const PceModel model(basis, random_coeffs(basis.size(), 5));
  const Matrix a = rotation2(M_PI / 4);
  const PceModel there = transfer_coefficients(model, a, basis);
  const PceModel back = transfer_coefficients(there, a.transpose(), basis);
  EXPECT_LT((back.coefficients - model.coefficients).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Transfer, PointwiseEquivalence) {
  for (int p = 1; p <= 3; ++p) {
    const auto basis = enumerate_basis(2, p);
    const PceModel model(basis, random_coeffs(basis.size(), 50 + static_cast<std::uint64_t>(p)));
    const Matrix a = random_rotation(2, 60 + static_cast<std::uint64_t>(p));
    const PceModel t = transfer_coefficients(model, a, basis);
    const Matrix x = sample_gaussian(100, 2, 70);
    const Vector lhs = evaluate(model, x);
    const Vector rhs = evaluate(t, x * a.transpose());
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-8) << "p=" << p;
    const PceModel back = transfer_coefficients(t, a.transpose(), basis);
    EXPECT_LT((back.coefficients - model.coefficients).cwiseAbs().maxCoeff(), 1e-6);
  }
  // Same identity in a higher dimension.
  const auto b5 = enumerate_basis(5, 3);
  const PceModel m5(b5, random_coeffs(b5.size(), 80));
  const Matrix a5 = random_rotation(5, 81);
  const PceModel t5 = transfer_coefficients(m5, a5, b5);
  const Matrix x5 = sample_gaussian(100, 5, 82);
  EXPECT_LT((evaluate(m5, x5) - evaluate(t5, x5 * a5.transpose())).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Transfer, MonteCarloBranchIsApproximate) {
  // 4^10 tensor nodes exceed the cap, so the seeded Monte Carlo estimate is used.
  const auto basis = enumerate_basis(10, 1);
  const Matrix m = inner_product_matrix(basis, basis, Matrix::Identity(10, 10), 4);
  EXPECT_LT((m - Matrix::Identity(11, 11)).cwiseAbs().maxCoeff(), 0.02);
  EXPECT_GT((m - Matrix::Identity(11, 11)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Transfer, RejectsNonOrthogonal) {
  const auto basis = enumerate_basis(2, 2);
  Matrix skew(2, 2);
  skew << 1, 0.1, 0, 1;
  EXPECT_THROW(inner_product_matrix(basis, basis, skew), Error);
  const PceModel proj(enumerate_basis(1, 2), Vector::Ones(3), ProjectionStack(Matrix::Identity(1, 2)));
  EXPECT_THROW(transfer_coefficients(proj, Matrix::Identity(2, 2), basis), Error);
}

TEST(ProjectionStack, Validation) {
  EXPECT_NO_THROW(ProjectionStack(rotation2(0.3).topRows(1)));
  Matrix bad(2, 3);
  bad << 1, 0, 0, 0.5, 0.5, 0;
  try {
    ProjectionStack s(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonOrthogonal);
  }
  EXPECT_THROW(ProjectionStack(Matrix::Identity(3, 2)), Error);
  const ProjectionStack s(random_rotation(4, 3).topRows(2));
  EXPECT_LT(orthonormality_error(s.rows()), 1e-10);
}
