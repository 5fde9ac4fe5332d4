#include "rngd/bn_net.hpp"

#include <cmath>

namespace rngd {

JacobianOperator::JacobianOperator(UnitRowPoint base, std::vector<Matrix> rows)
    : base_(std::move(base)), rows_(std::move(rows)) {
  for (const Matrix& r : rows_) {
    if (r.rows() != base_.m() || r.cols() != base_.n()) {
      throw DimensionError("Jacobian row shape does not match the base point");
    }
  }
}

Vector JacobianOperator::apply(const UnitRowTangent& v) const {
  if (!v.base().same_base(base_)) throw ContractViolation("Jacobian applied at a different point");
  Vector out(rows());
  for (Index i = 0; i < rows(); ++i) out(i) = (rows_[static_cast<std::size_t>(i)].array() * v.mat().array()).sum();
  return out;
}

UnitRowTangent JacobianOperator::adjoint(const Vector& r) const {
  if (r.size() != rows()) throw DimensionError("adjoint: residual length mismatch");
  Matrix acc = Matrix::Zero(base_.m(), base_.n());
  for (Index i = 0; i < rows(); ++i) acc += r(i) * rows_[static_cast<std::size_t>(i)];
  return project(base_, acc);
}

Matrix JacobianOperator::gram() const {
  const Index n = rows();
  Matrix g(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k <= i; ++k) {
      const double v =
          (rows_[static_cast<std::size_t>(i)].array() * rows_[static_cast<std::size_t>(k)].array()).sum();
      g(i, k) = v;
      g(k, i) = v;
    }
  }
  return g;
}

TwoLayerBnNet::TwoLayerBnNet(Vector a, Matrix v, Vector mu)
    : a_(std::move(a)), v_(std::move(v)), mu_(std::move(mu)) {
  if (a_.size() < 1) throw DimensionError("network needs at least one hidden unit");
  if (v_.rows() != v_.cols() || v_.rows() < 1) throw DimensionError("covariance must be square");
  if (mu_.size() != v_.rows()) throw DimensionError("mean and covariance sizes differ");
  for (Index j = 0; j < a_.size(); ++j) {
    if (std::abs(std::abs(a_(j)) - 1.0) > 1e-12) throw ContractViolation("output weights must be +-1");
  }
  if ((v_ - v_.transpose()).norm() > 1e-12 * std::max(1.0, v_.norm())) {
    throw ContractViolation("covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(v_, Eigen::EigenvaluesOnly);
  sigma_v_ = eig.eigenvalues().minCoeff();
  if (!(sigma_v_ > 0.0)) throw ContractViolation("covariance must be positive definite");
}

TwoLayerBnNet TwoLayerBnNet::with_sphere_moments(Vector a, Index n) {
  if (n < 1) throw DimensionError("input dimension must be positive");
  return TwoLayerBnNet(std::move(a), Matrix::Identity(n, n) / static_cast<double>(n), Vector::Zero(n));
}

TwoLayerBnNet TwoLayerBnNet::with_empirical_moments(Vector a, const Matrix& x) {
  if (x.rows() < 2) throw DimensionError("empirical moments need at least two inputs");
  const Vector mu = x.colwise().mean().transpose();
  const Matrix xc = x.rowwise() - mu.transpose();
  const Matrix v = xc.transpose() * xc / static_cast<double>(x.rows());
  return TwoLayerBnNet(std::move(a), 0.5 * (v + v.transpose()), mu);
}

void TwoLayerBnNet::check_inputs(const Matrix& x) const {
  if (x.cols() != n()) throw DimensionError("input dimension does not match the network");
}

Vector TwoLayerBnNet::scales(const UnitRowPoint& theta) const {
  if (theta.m() != m() || theta.n() != n()) throw DimensionError("weights do not match the network");
  const Matrix tv = theta.mat() * v_;
  return (tv.array() * theta.mat().array()).rowwise().sum().sqrt();
}

Matrix TwoLayerBnNet::preactivations(const UnitRowPoint& theta, const Matrix& x) const {
  check_inputs(x);
  const Vector s = scales(theta);
  const Matrix xc = x.rowwise() - mu_.transpose();
  Matrix z = xc * theta.mat().transpose();
  return z.array().rowwise() / s.transpose().array();
}

Vector TwoLayerBnNet::outputs(const UnitRowPoint& theta, const Matrix& x) const {
  const Matrix z = preactivations(theta, x);
  return z.cwiseMax(0.0) * a_ / std::sqrt(static_cast<double>(m()));
}

double TwoLayerBnNet::forward(const UnitRowPoint& theta, const Vector& x) const {
  return outputs(theta, x.transpose())(0);
}

Vector TwoLayerBnNet::phi(const Vector& u, const Vector& x) const {
  const Vector xc = x - mu_;
  const Vector vu = v_ * u;
  const double q = u.dot(vu);
  return xc / std::sqrt(q) - vu * (u.dot(xc) / (q * std::sqrt(q)));
}

JacobianOperator TwoLayerBnNet::jacobian(const UnitRowPoint& theta, const Matrix& x) const {
  check_inputs(x);
  const Vector s = scales(theta);
  const Matrix vt = theta.mat() * v_;  // row j is (V theta_j)^T
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m()));
  std::vector<Matrix> rows;
  rows.reserve(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) {
    const Vector xc = x.row(i).transpose() - mu_;
    const Vector proj = theta.mat() * xc;
    Vector c1(m());
    Vector c2(m());
    for (Index j = 0; j < m(); ++j) {
      const double w = proj(j) > 0.0 ? a_(j) * inv_sqrt_m : 0.0;
      c1(j) = w / s(j);
      c2(j) = w * proj(j) / (s(j) * s(j) * s(j));
    }
    rows.push_back(c1 * xc.transpose() - c2.asDiagonal() * vt);
  }
  return JacobianOperator(theta, std::move(rows));
}

double TwoLayerBnNet::loss(const UnitRowPoint& theta, const NetData& data) const {
  if (data.x.rows() != data.y.size() || data.y.size() == 0) throw DimensionError("bad network dataset");
  return 0.5 * (outputs(theta, data.x) - data.y).squaredNorm() / static_cast<double>(data.y.size());
}

UnitRowTangent TwoLayerBnNet::grad(const UnitRowPoint& theta, const NetData& data) const {
  if (data.x.rows() != data.y.size() || data.y.size() == 0) throw DimensionError("bad network dataset");
  const Vector r = (outputs(theta, data.x) - data.y) / static_cast<double>(data.y.size());
  return jacobian(theta, data.x).adjoint(r);
}

Vector random_signs(Index m, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  Vector a(m);
  for (Index j = 0; j < m; ++j) a(j) = coin(rng) ? 1.0 : -1.0;
  return a;
}

}  // namespace rngd
