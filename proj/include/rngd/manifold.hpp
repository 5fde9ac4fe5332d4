#pragma once

// Grassmann and product-of-spheres geometry with the embedded Euclidean
// metric. Points are immutable values; copies share their representative.

#include <Eigen/Dense>

#include <algorithm>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <utility>

#include "rngd/error.hpp"

namespace rngd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

enum class RetractionKind { Polar, QR, Exponential };

std::string_view to_string(RetractionKind kind);
RetractionKind parse_retraction(std::string_view name);

/// Orthonormal basis of the column space of `a` (thin Householder QR with the
/// diagonal of R made positive). Throws NumericalError on rank deficiency.
Matrix orthonormal_basis(const Matrix& a);

/// A point of Gr(n, p), stored as one n x p representative with orthonormal
/// columns. Compare points through projectors (subspace_dist), never through
/// the raw representative.
class GrassmannPoint {
 public:
  /// Accepts `rep` if ||rep^T rep - I||_F <= 1e-12, re-orthonormalizes it if
  /// the violation is below 1e-6 and throws ContractViolation otherwise.
  explicit GrassmannPoint(Matrix rep);

  /// Orthonormalizes an arbitrary full-column-rank matrix.
  static GrassmannPoint from_basis(const Matrix& any);

  const Matrix& mat() const noexcept { return *rep_; }
  Index n() const noexcept { return rep_->rows(); }
  Index p() const noexcept { return rep_->cols(); }
  Matrix projector() const { return mat() * mat().transpose(); }

  /// True when both refer to the same stored representative or to bitwise
  /// equal ones.
  bool same_base(const GrassmannPoint& other) const;

 private:
  std::shared_ptr<const Matrix> rep_;
};

/// A point of Gr(1, n) x ... x Gr(1, n): an m x n matrix whose rows are unit
/// vectors (one sphere representative per hidden unit).
class UnitRowPoint {
 public:
  /// Same tolerance policy as GrassmannPoint, applied per row.
  explicit UnitRowPoint(Matrix rows);

  /// Normalizes every row of `any`; throws NumericalError on a zero row.
  static UnitRowPoint from_rows(const Matrix& any);

  const Matrix& mat() const noexcept { return *rows_; }
  Index m() const noexcept { return rows_->rows(); }
  Index n() const noexcept { return rows_->cols(); }

  bool same_base(const UnitRowPoint& other) const;

 private:
  std::shared_ptr<const Matrix> rows_;
};

double tangency_error(const GrassmannPoint& base, const Matrix& v);
double tangency_error(const UnitRowPoint& base, const Matrix& v);

/// Tangent vector stored in ambient coordinates together with its base point.
template <class Point>
class Tangent {
 public:
  /// Checks tangency to 1e-10 (relative to max(1, ||mat||)).
  Tangent(Point base, Matrix mat) : base_(std::move(base)), mat_(std::move(mat)) {
    if (mat_.rows() != base_.mat().rows() || mat_.cols() != base_.mat().cols()) {
      throw DimensionError("tangent vector shape does not match its base point");
    }
    const double tol = 1e-10 * std::max(1.0, mat_.norm());
    if (!(tangency_error(base_, mat_) <= tol)) {
      throw ContractViolation("matrix is not tangent at the given base point");
    }
  }

  static Tangent zero(const Point& base) {
    return Tangent(base, Matrix::Zero(base.mat().rows(), base.mat().cols()), Trusted{});
  }

  /// For results of an orthogonal projection onto the tangent space; the
  /// caller guarantees tangency.
  static Tangent from_projected(const Point& base, Matrix mat) {
    return Tangent(base, std::move(mat), Trusted{});
  }

  const Point& base() const noexcept { return base_; }
  const Matrix& mat() const noexcept { return mat_; }

  Tangent& operator+=(const Tangent& o) {
    require_same_base(o);
    mat_ += o.mat_;
    return *this;
  }
  Tangent& operator-=(const Tangent& o) {
    require_same_base(o);
    mat_ -= o.mat_;
    return *this;
  }
  Tangent& operator*=(double s) {
    mat_ *= s;
    return *this;
  }
  friend Tangent operator+(Tangent a, const Tangent& b) { return a += b; }
  friend Tangent operator-(Tangent a, const Tangent& b) { return a -= b; }
  friend Tangent operator*(double s, Tangent a) { return a *= s; }
  friend Tangent operator*(Tangent a, double s) { return a *= s; }
  friend Tangent operator-(Tangent a) { return a *= -1.0; }

  void require_same_base(const Tangent& o) const {
    if (!base_.same_base(o.base_)) {
      throw ContractViolation("tangent vectors live at different base points");
    }
  }

 private:
  struct Trusted {};
  Tangent(Point base, Matrix mat, Trusted) : base_(std::move(base)), mat_(std::move(mat)) {}

  Point base_;
  Matrix mat_;
};

using TangentVector = Tangent<GrassmannPoint>;
using UnitRowTangent = Tangent<UnitRowPoint>;

/// (I - X X^T) G.
TangentVector project(const GrassmannPoint& base, const Matrix& ambient);
/// Row-wise removal of the component along each unit row.
UnitRowTangent project(const UnitRowPoint& base, const Matrix& ambient);

/// R_base(t xi). The result is always re-orthonormalized.
GrassmannPoint retract(const GrassmannPoint& base, const TangentVector& xi, double t,
                       RetractionKind kind = RetractionKind::Polar);
UnitRowPoint retract(const UnitRowPoint& base, const UnitRowTangent& xi, double t,
                     RetractionKind kind = RetractionKind::Polar);

/// Geodesic step: with xi = U S V^T (compact SVD) returns
/// (X V cos(tS) + U sin(tS)) V^T.
GrassmannPoint exp_map(const GrassmannPoint& base, const TangentVector& xi, double t);
/// Great-circle step per row.
UnitRowPoint exp_map(const UnitRowPoint& base, const UnitRowTangent& xi, double t);

/// QR of an n x p standard Gaussian matrix.
GrassmannPoint random_point(Index n, Index p, Rng& rng);
/// Rows i.i.d. uniform on the unit sphere of R^n.
UnitRowPoint random_unit_rows(Index m, Index n, Rng& rng);

/// Standard Gaussian ambient matrix projected to the tangent space.
TangentVector random_tangent(const GrassmannPoint& base, Rng& rng);
UnitRowTangent random_tangent(const UnitRowPoint& base, Rng& rng);

template <class Point>
double inner(const Tangent<Point>& a, const Tangent<Point>& b) {
  a.require_same_base(b);
  return (a.mat().array() * b.mat().array()).sum();
}

template <class Point>
double norm(const Tangent<Point>& a) {
  return a.mat().norm();
}

/// ||P P^T - Q Q^T||_F.
double subspace_dist(const GrassmannPoint& a, const GrassmannPoint& b);

}  // namespace rngd
