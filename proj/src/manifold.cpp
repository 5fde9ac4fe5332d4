#include "rngd/manifold.hpp"

#include <cmath>
#include <string>

namespace rngd {

namespace {

constexpr double kAcceptTol = 1e-12;
constexpr double kRepairTol = 1e-6;

Matrix standard_normal(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  // Column-major fill order keeps draws reproducible across Eigen versions.
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  }
  return g;
}

Matrix normalize_rows(const Matrix& a) {
  Matrix out = a;
  for (Index i = 0; i < out.rows(); ++i) {
    const double nrm = out.row(i).norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
      throw NumericalError("cannot normalize a zero or non-finite row");
    }
    out.row(i) /= nrm;
  }
  return out;
}

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) throw NumericalError(std::string(what) + ": non-finite entries");
}

}  // namespace

std::string_view to_string(RetractionKind kind) {
  switch (kind) {
    case RetractionKind::Polar:
      return "polar";
    case RetractionKind::QR:
      return "qr";
    case RetractionKind::Exponential:
      return "exp";
  }
  return "polar";
}

RetractionKind parse_retraction(std::string_view name) {
  if (name == "polar") return RetractionKind::Polar;
  if (name == "qr") return RetractionKind::QR;
  if (name == "exp" || name == "exponential") return RetractionKind::Exponential;
  throw DataError("unknown retraction '" + std::string(name) + "'");
}

Matrix orthonormal_basis(const Matrix& a) {
  require_finite(a, "orthonormal_basis");
  const Index n = a.rows();
  const Index p = a.cols();
  if (p == 0 || n < p) throw DimensionError("orthonormal_basis needs n >= p >= 1");
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(n, p);
  const Matrix& r = qr.matrixQR();
  const double scale = std::max(1.0, a.norm());
  for (Index j = 0; j < p; ++j) {
    const double d = r(j, j);
    if (std::abs(d) <= 1e-14 * scale) throw NumericalError("rank-deficient basis in QR");
    if (d < 0) q.col(j) = -q.col(j);
  }
  return q;
}

GrassmannPoint::GrassmannPoint(Matrix rep) {
  if (rep.cols() < 1 || rep.rows() < rep.cols()) {
    throw DimensionError("Grassmann representative needs n >= p >= 1");
  }
  require_finite(rep, "GrassmannPoint");
  const Index p = rep.cols();
  const double err = (rep.transpose() * rep - Matrix::Identity(p, p)).norm();
  if (err <= kAcceptTol) {
    rep_ = std::make_shared<const Matrix>(std::move(rep));
  } else if (err < kRepairTol) {
    rep_ = std::make_shared<const Matrix>(orthonormal_basis(rep));
  } else {
    throw ContractViolation("representative columns are not orthonormal (error " +
                            std::to_string(err) + ")");
  }
}

GrassmannPoint GrassmannPoint::from_basis(const Matrix& any) {
  return GrassmannPoint(orthonormal_basis(any));
}

bool GrassmannPoint::same_base(const GrassmannPoint& other) const {
  if (rep_ == other.rep_) return true;
  return rep_->rows() == other.rep_->rows() && rep_->cols() == other.rep_->cols() &&
         *rep_ == *other.rep_;
}

UnitRowPoint::UnitRowPoint(Matrix rows) {
  if (rows.rows() < 1 || rows.cols() < 1) throw DimensionError("unit-row point needs m, n >= 1");
  require_finite(rows, "UnitRowPoint");
  double worst = 0.0;
  for (Index i = 0; i < rows.rows(); ++i) worst = std::max(worst, std::abs(rows.row(i).norm() - 1.0));
  if (worst <= kAcceptTol) {
    rows_ = std::make_shared<const Matrix>(std::move(rows));
  } else if (worst < kRepairTol) {
    rows_ = std::make_shared<const Matrix>(normalize_rows(rows));
  } else {
    throw ContractViolation("rows are not unit vectors (error " + std::to_string(worst) + ")");
  }
}

UnitRowPoint UnitRowPoint::from_rows(const Matrix& any) { return UnitRowPoint(normalize_rows(any)); }

bool UnitRowPoint::same_base(const UnitRowPoint& other) const {
  if (rows_ == other.rows_) return true;
  return rows_->rows() == other.rows_->rows() && rows_->cols() == other.rows_->cols() &&
         *rows_ == *other.rows_;
}

double tangency_error(const GrassmannPoint& base, const Matrix& v) {
  return (base.mat().transpose() * v).norm();
}

double tangency_error(const UnitRowPoint& base, const Matrix& v) {
  return (base.mat().array() * v.array()).rowwise().sum().matrix().norm();
}

TangentVector project(const GrassmannPoint& base, const Matrix& ambient) {
  if (ambient.rows() != base.n() || ambient.cols() != base.p()) {
    throw DimensionError("project: ambient matrix shape does not match the base point");
  }
  const Matrix& x = base.mat();
  return TangentVector::from_projected(base, ambient - x * (x.transpose() * ambient));
}

UnitRowTangent project(const UnitRowPoint& base, const Matrix& ambient) {
  if (ambient.rows() != base.m() || ambient.cols() != base.n()) {
    throw DimensionError("project: ambient matrix shape does not match the base point");
  }
  const Matrix& x = base.mat();
  const Vector dots = (x.array() * ambient.array()).rowwise().sum();
  return UnitRowTangent::from_projected(base, ambient - dots.asDiagonal() * x);
}

namespace {

void check_step(const GrassmannPoint& base, const TangentVector& xi, double t) {
  if (!std::isfinite(t)) throw ContractViolation("retraction step must be finite");
  if (!xi.base().same_base(base)) throw ContractViolation("xi is not tangent at base");
}

void check_step(const UnitRowPoint& base, const UnitRowTangent& xi, double t) {
  if (!std::isfinite(t)) throw ContractViolation("retraction step must be finite");
  if (!xi.base().same_base(base)) throw ContractViolation("xi is not tangent at base");
}

}  // namespace

GrassmannPoint retract(const GrassmannPoint& base, const TangentVector& xi, double t,
                       RetractionKind kind) {
  check_step(base, xi, t);
  if (t == 0.0) return base;
  if (kind == RetractionKind::Exponential) return exp_map(base, xi, t);
  const Matrix y = base.mat() + t * xi.mat();
  if (kind == RetractionKind::QR) return GrassmannPoint(orthonormal_basis(y));

  // Polar factor: (X + t xi)(I + t^2 xi^T xi)^{-1/2}, using X^T xi = 0.
  const Index p = base.p();
  const Matrix gram = Matrix::Identity(p, p) + (t * t) * (xi.mat().transpose() * xi.mat());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericalError("polar retraction: eigensolver failed");
  const Vector inv_sqrt = eig.eigenvalues().array().rsqrt();
  const Matrix polar = y * (eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose());
  return GrassmannPoint(orthonormal_basis(polar));
}

UnitRowPoint retract(const UnitRowPoint& base, const UnitRowTangent& xi, double t,
                     RetractionKind kind) {
  check_step(base, xi, t);
  if (t == 0.0) return base;
  if (kind == RetractionKind::Exponential) return exp_map(base, xi, t);
  // Polar and QR coincide on a sphere: normalize.
  return UnitRowPoint(normalize_rows(base.mat() + t * xi.mat()));
}

GrassmannPoint exp_map(const GrassmannPoint& base, const TangentVector& xi, double t) {
  check_step(base, xi, t);
  if (t == 0.0) return base;
  Eigen::JacobiSVD<Matrix> svd(xi.mat(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s = t * svd.singularValues();
  const Matrix& v = svd.matrixV();
  const Vector c = s.array().cos();
  const Vector sn = s.array().sin();
  Matrix y = (base.mat() * v * c.asDiagonal() + svd.matrixU() * sn.asDiagonal()) * v.transpose();
  if (!y.allFinite()) throw NumericalError("exp_map produced non-finite values");
  return GrassmannPoint(orthonormal_basis(y));
}

UnitRowPoint exp_map(const UnitRowPoint& base, const UnitRowTangent& xi, double t) {
  check_step(base, xi, t);
  if (t == 0.0) return base;
  Matrix out(base.m(), base.n());
  for (Index j = 0; j < base.m(); ++j) {
    const Eigen::RowVectorXd v = t * xi.mat().row(j);
    const double len = v.norm();
    if (len < 1e-300) {
      out.row(j) = base.mat().row(j);
    } else {
      out.row(j) = std::cos(len) * base.mat().row(j) + (std::sin(len) / len) * v;
    }
  }
  return UnitRowPoint(normalize_rows(out));
}

GrassmannPoint random_point(Index n, Index p, Rng& rng) {
  if (p < 1 || n < p) throw DimensionError("random_point needs n >= p >= 1");
  return GrassmannPoint(orthonormal_basis(standard_normal(n, p, rng)));
}

UnitRowPoint random_unit_rows(Index m, Index n, Rng& rng) {
  if (m < 1 || n < 1) throw DimensionError("random_unit_rows needs m, n >= 1");
  // Row-major fill: row j consumes n consecutive draws.
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) g(i, j) = normal(rng);
  }
  return UnitRowPoint(normalize_rows(g));
}

TangentVector random_tangent(const GrassmannPoint& base, Rng& rng) {
  return project(base, standard_normal(base.n(), base.p(), rng));
}

UnitRowTangent random_tangent(const UnitRowPoint& base, Rng& rng) {
  return project(base, standard_normal(base.m(), base.n(), rng));
}

double subspace_dist(const GrassmannPoint& a, const GrassmannPoint& b) {
  if (a.n() != b.n()) throw DimensionError("subspace_dist: ambient dimensions differ");
  if (a.p() == b.p()) {
    // ||PP^T - QQ^T||_F^2 = 2 ||(I - PP^T) Q||_F^2 for equal ranks.
    const Matrix resid = b.mat() - a.mat() * (a.mat().transpose() * b.mat());
    return std::sqrt(2.0) * resid.norm();
  }
  const double cross = (a.mat().transpose() * b.mat()).squaredNorm();
  const double sq = static_cast<double>(a.p() + b.p()) - 2.0 * cross;
  return std::sqrt(std::max(0.0, sq));
}

}  // namespace rngd
