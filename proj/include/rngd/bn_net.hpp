#pragma once

// Single-output two-layer ReLU network with batch normalization:
//   f(x, theta) = (1/sqrt(m)) sum_j a_j relu(theta_j^T (x - mu) / sqrt(theta_j^T V theta_j)).
// The hidden weights theta_j are rows of a UnitRowPoint; a is fixed.

#include <vector>

#include "rngd/manifold.hpp"

namespace rngd {

struct NetData {
  Matrix x;  // N x n, one input per row
  Vector y;
};

/// Matrix-free view of the N x (m n) Jacobian of the output vector. Row i is
/// stored as an m x n matrix (block j is the gradient in theta_j).
class JacobianOperator {
 public:
  JacobianOperator(UnitRowPoint base, std::vector<Matrix> rows);

  Index rows() const noexcept { return static_cast<Index>(rows_.size()); }
  const UnitRowPoint& base() const noexcept { return base_; }
  const Matrix& row(Index i) const { return rows_.at(static_cast<std::size_t>(i)); }

  /// J v.
  Vector apply(const UnitRowTangent& v) const;
  /// J^T r, tangent at base.
  UnitRowTangent adjoint(const Vector& r) const;
  /// J J^T.
  Matrix gram() const;

 private:
  UnitRowPoint base_;
  std::vector<Matrix> rows_;
};

class TwoLayerBnNet {
 public:
  /// `v` symmetric positive definite, `mu` the input mean, |a_j| = 1.
  TwoLayerBnNet(Vector a, Matrix v, Vector mu);

  /// V = I/n and mu = 0: the moments of inputs uniform on the unit sphere.
  static TwoLayerBnNet with_sphere_moments(Vector a, Index n);
  /// Empirical mean and covariance of the rows of `x`.
  static TwoLayerBnNet with_empirical_moments(Vector a, const Matrix& x);

  Index m() const noexcept { return a_.size(); }
  Index n() const noexcept { return v_.rows(); }
  const Vector& a() const noexcept { return a_; }
  const Matrix& v() const noexcept { return v_; }
  const Vector& mu() const noexcept { return mu_; }
  /// Smallest eigenvalue of V.
  double sigma_v() const noexcept { return sigma_v_; }

  double forward(const UnitRowPoint& theta, const Vector& x) const;
  Vector outputs(const UnitRowPoint& theta, const Matrix& x) const;
  /// N x m matrix of normalized pre-activations.
  Matrix preactivations(const UnitRowPoint& theta, const Matrix& x) const;

  /// d/du of u^T (x - mu) / sqrt(u^T V u) for a unit u; orthogonal to u.
  Vector phi(const Vector& u, const Vector& x) const;

  /// Generalized Jacobian with relu'(0) = 0.
  JacobianOperator jacobian(const UnitRowPoint& theta, const Matrix& x) const;

  /// (1/2N) ||u(theta) - y||^2.
  double loss(const UnitRowPoint& theta, const NetData& data) const;
  /// Riemannian gradient (1/N) J^T (u - y).
  UnitRowTangent grad(const UnitRowPoint& theta, const NetData& data) const;

 private:
  void check_inputs(const Matrix& x) const;
  Vector scales(const UnitRowPoint& theta) const;

  Vector a_;
  Matrix v_;
  Vector mu_;
  double sigma_v_ = 0.0;
};

/// m independent uniform +-1 output weights.
Vector random_signs(Index m, Rng& rng);

}  // namespace rngd
