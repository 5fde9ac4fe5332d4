#include "rngd/subspace.hpp"

#include <cmath>

namespace rngd {

namespace {

void check_batch(Batch batch, Index count) {
  if (batch.empty()) throw ContractViolation("batch must not be empty");
  for (Index i : batch) {
    if (i < 0 || i >= count) throw DimensionError("batch index out of range");
  }
}

void check_task(const Task& t, Index n) {
  if (t.x.cols() != n) throw DimensionError("task design has the wrong number of features");
  if (t.x.rows() != t.y.size()) throw DimensionError("task design and response lengths differ");
  if (!t.x.allFinite() || !t.y.allFinite()) throw DataError("task has non-finite values");
}

double nmse(const Matrix& u, const Task& t, const Vector& w, bool& usable) {
  const double yy = t.y.squaredNorm();
  usable = yy > 0.0;
  if (!usable) return 0.0;
  return (t.x * (u * w) - t.y).squaredNorm() / yy;
}

}  // namespace

Vector msl_coeffs(const Matrix& u, const Task& task, double lambda) {
  if (!(lambda > 0.0)) throw ContractViolation("msl ridge parameter must be positive");
  const Matrix b = task.x * u;
  Matrix m = b.transpose() * b;
  m.diagonal().array() += lambda;
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError("msl_coeffs: Cholesky failed");
  return llt.solve(b.transpose() * task.y);
}

SubspaceLearningProblem::SubspaceLearningProblem(Index p, double lambda, std::vector<Task> train,
                                                 std::vector<Task> test, MslGradient mode)
    : p_(p), lambda_(lambda), train_(std::move(train)), test_(std::move(test)), mode_(mode) {
  if (!(lambda_ > 0.0)) throw ContractViolation("msl ridge parameter must be positive");
  if (train_.empty()) throw ContractViolation("subspace learning needs at least one task");
  if (train_.size() != test_.size()) throw DimensionError("train and test task counts differ");
  n_ = train_.front().x.cols();
  if (p_ < 1 || n_ < p_) throw DimensionError("subspace learning needs n >= p >= 1");
  for (const Task& t : train_) check_task(t, n_);
  for (const Task& t : test_) check_task(t, n_);
}

double SubspaceLearningProblem::loss(const GrassmannPoint& u, Batch batch) const {
  check_batch(batch, num_samples());
  double acc = 0.0;
  for (Index i : batch) {
    const Task& t = train_[static_cast<std::size_t>(i)];
    const Vector w = msl_coeffs(u.mat(), t, lambda_);
    acc += (t.x * (u.mat() * w) - t.y).squaredNorm();
  }
  return 0.5 * acc / static_cast<double>(batch.size());
}

LossGrad SubspaceLearningProblem::loss_grad(const GrassmannPoint& u, Batch batch) const {
  check_batch(batch, num_samples());
  Matrix egrad = Matrix::Zero(n_, p_);
  double acc = 0.0;
  for (Index i : batch) {
    const Task& t = train_[static_cast<std::size_t>(i)];
    const Matrix b = t.x * u.mat();
    Matrix m = b.transpose() * b;
    m.diagonal().array() += lambda_;
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) throw NumericalError("msl gradient: Cholesky failed");
    const Vector w = llt.solve(b.transpose() * t.y);
    const Vector r = b * w - t.y;
    acc += r.squaredNorm();
    if (mode_ == MslGradient::Approximate) {
      egrad.noalias() += t.x.transpose() * (r * w.transpose());
    } else {
      // With M = B^T B + lambda I and s = M^{-1} B^T r:
      //   dPsi_i/dB = r w^T - r s^T - B s w^T.
      const Vector s = llt.solve(b.transpose() * r);
      const Matrix db = r * w.transpose() - r * s.transpose() - (b * s) * w.transpose();
      egrad.noalias() += t.x.transpose() * db;
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  return {0.5 * acc * inv, project(u, egrad * inv)};
}

KroneckerFisher SubspaceLearningProblem::fisher(const GrassmannPoint& u, Batch batch) const {
  check_batch(batch, num_samples());
  Matrix a_factor = Matrix::Zero(p_, p_);
  Matrix xtx = Matrix::Zero(n_, n_);
  for (Index i : batch) {
    const Task& t = train_[static_cast<std::size_t>(i)];
    const Vector w = msl_coeffs(u.mat(), t, lambda_);
    a_factor.noalias() += w * w.transpose();
    xtx.noalias() += t.x.transpose() * t.x;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  const Matrix& x = u.mat();
  // P (X^T X) P with P = I - U U^T.
  Matrix g = xtx * inv;
  g -= x * (x.transpose() * g);
  g -= (g * x) * x.transpose();
  return KroneckerFisher(0.5 * (a_factor + a_factor.transpose()) * inv, 0.5 * (g + g.transpose()));
}

Metrics SubspaceLearningProblem::metrics(const GrassmannPoint& u) const {
  double train_sum = 0.0;
  double test_sum = 0.0;
  Index train_count = 0;
  Index test_count = 0;
  for (std::size_t i = 0; i < train_.size(); ++i) {
    const Vector w = msl_coeffs(u.mat(), train_[i], lambda_);
    bool usable = false;
    const double tr = nmse(u.mat(), train_[i], w, usable);
    if (usable) {
      train_sum += tr;
      ++train_count;
    }
    const double te = nmse(u.mat(), test_[i], w, usable);
    if (usable) {
      test_sum += te;
      ++test_count;
    }
  }
  const double nan = std::nan("");
  return {train_count > 0 ? train_sum / static_cast<double>(train_count) : nan,
          test_count > 0 ? test_sum / static_cast<double>(test_count) : nan};
}

}  // namespace rngd
