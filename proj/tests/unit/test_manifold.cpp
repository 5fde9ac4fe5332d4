#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rngd/manifold.hpp"

using namespace rngd;

namespace {

TEST(Grassmann, RandomPointHasOrthonormalColumns) {
  Rng rng(1);
  const GrassmannPoint x = random_point(9, 3, rng);
  EXPECT_LT((x.mat().transpose() * x.mat() - Matrix::Identity(3, 3)).norm(), 1e-13);
}

TEST(Grassmann, RejectsFarFromOrthonormal) {
  Matrix m = Matrix::Identity(5, 2);
  m(0, 0) = 1.1;
  EXPECT_THROW(GrassmannPoint{m}, ContractViolation);
}

TEST(Grassmann, RepairsTinyViolation) {
  Matrix m = Matrix::Identity(5, 2);
  m(0, 0) += 1e-9;
  const GrassmannPoint x(m);
  EXPECT_LT((x.mat().transpose() * x.mat() - Matrix::Identity(2, 2)).norm(), 1e-13);
}

TEST(Grassmann, ProjectionRemovesNormalPart) {
  Rng rng(2);
  const GrassmannPoint x = random_point(8, 3, rng);
  const Matrix b = oracle::gaussian(3, 3, rng);
  EXPECT_LT(project(x, x.mat() * b).mat().norm(), 1e-13);
  const Matrix g = oracle::gaussian(8, 3, rng);
  const Matrix expected = (Matrix::Identity(8, 8) - x.projector()) * g;
  EXPECT_LT((project(x, g).mat() - expected).norm(), 1e-12);
}

TEST(Grassmann, TangentConstructorChecksTangency) {
  Rng rng(3);
  const GrassmannPoint x = random_point(6, 2, rng);
  EXPECT_THROW(TangentVector(x, x.mat()), ContractViolation);
  EXPECT_THROW(TangentVector(x, Matrix::Zero(6, 3)), DimensionError);
  EXPECT_NO_THROW(TangentVector(x, project(x, oracle::gaussian(6, 2, rng)).mat()));
}

TEST(Grassmann, InnerRequiresSameBase) {
  Rng rng(4);
  const GrassmannPoint x = random_point(6, 2, rng);
  const GrassmannPoint y = random_point(6, 2, rng);
  EXPECT_THROW(inner(random_tangent(x, rng), random_tangent(y, rng)), ContractViolation);
}

TEST(Grassmann, ZeroStepReturnsBase) {
  Rng rng(5);
  const GrassmannPoint x = random_point(7, 3, rng);
  const TangentVector xi = random_tangent(x, rng);
  for (RetractionKind k : {RetractionKind::Polar, RetractionKind::QR, RetractionKind::Exponential}) {
    EXPECT_EQ((retract(x, xi, 0.0, k).mat() - x.mat()).norm(), 0.0) << to_string(k);
  }
}

// Polar and QR retractions both land on span(X + t xi).
TEST(Grassmann, RetractionsSpanShiftedColumns) {
  Rng rng(6);
  const GrassmannPoint x = random_point(10, 3, rng);
  const TangentVector xi = random_tangent(x, rng);
  const Matrix target = oracle::projector(oracle::range_basis(x.mat() + 0.7 * xi.mat()));
  for (RetractionKind k : {RetractionKind::Polar, RetractionKind::QR}) {
    EXPECT_LT((retract(x, xi, 0.7, k).projector() - target).norm(), 1e-12) << to_string(k);
  }
}

TEST(Grassmann, PolarMatchesClosedForm) {
  Rng rng(7);
  const GrassmannPoint x = random_point(10, 3, rng);
  const TangentVector xi = random_tangent(x, rng);
  const double t = 0.4;
  const Matrix expected = (x.mat() + t * xi.mat()) *
                          oracle::inv_sqrt_sym(Matrix::Identity(3, 3) + t * t * xi.mat().transpose() * xi.mat());
  EXPECT_LT((retract(x, xi, t, RetractionKind::Polar).projector() - oracle::projector(expected)).norm(), 1e-12);
}

// Geodesic principal angles grow linearly: theta_i = t sigma_i(xi).
TEST(Grassmann, ExponentialPrincipalAngles) {
  Rng rng(8);
  const GrassmannPoint x = random_point(12, 3, rng);
  TangentVector xi = random_tangent(x, rng);
  xi *= 1.0 / norm(xi);
  Eigen::JacobiSVD<Matrix> svd(xi.mat());
  for (double t : {0.1, 0.5, 1.2}) {
    const Vector angles = oracle::principal_angles(x.mat(), exp_map(x, xi, t).mat());
    Vector expected = t * svd.singularValues();
    std::sort(expected.data(), expected.data() + expected.size());
    EXPECT_LT((angles - expected).norm(), 1e-10) << "t=" << t;
  }
}

TEST(Grassmann, ExponentialOnLinesIsGreatCircle) {
  Rng rng(9);
  const GrassmannPoint x = random_point(5, 1, rng);
  TangentVector xi = random_tangent(x, rng);
  const double s = norm(xi);
  const Vector expected = x.mat().col(0) * std::cos(0.8 * s) + xi.mat().col(0) / s * std::sin(0.8 * s);
  const Vector got = exp_map(x, xi, 0.8).mat().col(0);
  EXPECT_LT(std::min((got - expected).norm(), (got + expected).norm()), 1e-12);
}

TEST(Grassmann, SubspaceDistanceIgnoresBasisRotation) {
  Rng rng(10);
  const GrassmannPoint x = random_point(8, 3, rng);
  const Matrix q = oracle::range_basis(oracle::gaussian(3, 3, rng));
  EXPECT_LT(subspace_dist(x, GrassmannPoint(x.mat() * q)), 1e-12);
  const GrassmannPoint y = random_point(8, 3, rng);
  EXPECT_NEAR(subspace_dist(x, y), (x.projector() - y.projector()).norm(), 1e-12);
}

TEST(Grassmann, RetractionNames) {
  for (RetractionKind k : {RetractionKind::Polar, RetractionKind::QR, RetractionKind::Exponential}) {
    EXPECT_EQ(parse_retraction(to_string(k)), k);
  }
  EXPECT_THROW(parse_retraction("cayley"), DataError);
}

TEST(Grassmann, OrthonormalBasisRejectsRankDeficiency) {
  Matrix a(4, 2);
  a << 1, 2, 1, 2, 1, 2, 1, 2;
  EXPECT_THROW(orthonormal_basis(a), NumericalError);
}

TEST(UnitRows, FromRowsNormalizes) {
  Rng rng(11);
  const UnitRowPoint th = UnitRowPoint::from_rows(oracle::gaussian(5, 4, rng));
  for (Index j = 0; j < 5; ++j) EXPECT_NEAR(th.mat().row(j).norm(), 1.0, 1e-14);
  EXPECT_THROW(UnitRowPoint::from_rows(Matrix::Zero(2, 3)), NumericalError);
}

TEST(UnitRows, ProjectionIsRowwise) {
  Rng rng(12);
  const UnitRowPoint th = random_unit_rows(4, 6, rng);
  const Matrix g = oracle::gaussian(4, 6, rng);
  const Matrix d = project(th, g).mat();
  for (Index j = 0; j < 4; ++j) {
    const Vector t = th.mat().row(j).transpose();
    const Vector expected = g.row(j).transpose() - t * t.dot(g.row(j).transpose());
    EXPECT_LT((d.row(j).transpose() - expected).norm(), 1e-13);
  }
}

TEST(UnitRows, ExponentialPerRowGreatCircle) {
  Rng rng(13);
  const UnitRowPoint th = random_unit_rows(3, 5, rng);
  const UnitRowTangent xi = random_tangent(th, rng);
  const UnitRowPoint out = exp_map(th, xi, 0.6);
  for (Index j = 0; j < 3; ++j) {
    const Vector t = th.mat().row(j).transpose();
    const Vector v = xi.mat().row(j).transpose();
    const double s = v.norm();
    const Vector expected = t * std::cos(0.6 * s) + v / s * std::sin(0.6 * s);
    EXPECT_LT((out.mat().row(j).transpose() - expected).norm(), 1e-12);
  }
}

TEST(UnitRows, PolarRetractionNormalizesShift) {
  Rng rng(14);
  const UnitRowPoint th = random_unit_rows(3, 5, rng);
  const UnitRowTangent xi = random_tangent(th, rng);
  const UnitRowPoint out = retract(th, xi, 0.3, RetractionKind::Polar);
  for (Index j = 0; j < 3; ++j) {
    const Vector shifted = (th.mat().row(j) + 0.3 * xi.mat().row(j)).transpose();
    EXPECT_LT((out.mat().row(j).transpose() - shifted.normalized()).norm(), 1e-13);
  }
}

TEST(Tangent, ArithmeticStaysOnBase) {
  Rng rng(15);
  const GrassmannPoint x = random_point(6, 2, rng);
  const TangentVector a = random_tangent(x, rng);
  const TangentVector b = random_tangent(x, rng);
  const TangentVector c = 2.0 * a - b;
  EXPECT_LT((c.mat() - (2.0 * a.mat() - b.mat())).norm(), 1e-14);
  EXPECT_NEAR(inner(a, b), (a.mat().transpose() * b.mat()).trace(), 1e-13);
}

}  // namespace
