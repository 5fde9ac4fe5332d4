#include "rngd/lrmc.hpp"

#include <cmath>
#include <string>

namespace rngd {

namespace {

Matrix observed_rows(const Matrix& u, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), u.cols());
  for (std::size_t s = 0; s < rows.size(); ++s) out.row(static_cast<Index>(s)) = u.row(rows[s]);
  return out;
}

void check_batch(Batch batch, Index count) {
  if (batch.empty()) throw ContractViolation("batch must not be empty");
  for (Index i : batch) {
    if (i < 0 || i >= count) throw DimensionError("batch index out of range");
  }
}

void check_column(const ObservedColumn& col, Index n, const char* which) {
  if (static_cast<Index>(col.rows.size()) != col.values.size()) {
    throw DimensionError(std::string(which) + " column: rows and values differ in length");
  }
  for (Index r : col.rows) {
    if (r < 0 || r >= n) throw DimensionError(std::string(which) + " column: row index out of range");
  }
  if (!col.values.allFinite()) throw DataError(std::string(which) + " column: non-finite value");
}

}  // namespace

ColumnFit lrmc_coeffs(const Matrix& u, const ObservedColumn& col) {
  const Index p = u.cols();
  if (col.rows.empty()) return {Vector::Zero(p), true};
  const Matrix uo = observed_rows(u, col.rows);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(uo);
  cod.setThreshold(1e-12);
  ColumnFit fit{cod.solve(col.values), cod.rank() < p};
  if (!fit.a.allFinite()) throw NumericalError("lrmc_coeffs: non-finite coefficients");
  return fit;
}

Vector lrmc_residual(const Matrix& u, const ObservedColumn& col, const Vector& a) {
  Vector r(col.values.size());
  for (std::size_t s = 0; s < col.rows.size(); ++s) {
    const Index k = static_cast<Index>(s);
    r(k) = u.row(col.rows[s]).dot(a) - col.values(k);
  }
  return r;
}

LrmcProblem::LrmcProblem(Index n, Index p, std::vector<ObservedColumn> train,
                         std::vector<ObservedColumn> test, LrmcFisher fisher_kind)
    : n_(n), p_(p), train_(std::move(train)), test_(std::move(test)), fisher_kind_(fisher_kind) {
  if (p < 1 || n < p) throw DimensionError("lrmc needs n >= p >= 1");
  if (train_.empty()) throw ContractViolation("lrmc needs at least one column");
  if (train_.size() != test_.size()) throw DimensionError("train and test column counts differ");
  for (const ObservedColumn& c : train_) {
    check_column(c, n_, "train");
    train_entries_ += static_cast<Index>(c.rows.size());
    if (static_cast<Index>(c.rows.size()) < p_) ++short_columns_;
  }
  for (const ObservedColumn& c : test_) {
    check_column(c, n_, "test");
    test_entries_ += static_cast<Index>(c.rows.size());
  }
  if (train_entries_ == 0) throw ContractViolation("lrmc needs at least one observed entry");
}

double LrmcProblem::loss(const GrassmannPoint& u, Batch batch) const {
  check_batch(batch, num_samples());
  double acc = 0.0;
  for (Index i : batch) {
    const ObservedColumn& c = train_[static_cast<std::size_t>(i)];
    acc += lrmc_residual(u.mat(), c, lrmc_coeffs(u.mat(), c).a).squaredNorm();
  }
  return 0.5 * acc / static_cast<double>(batch.size());
}

LossGrad LrmcProblem::loss_grad(const GrassmannPoint& u, Batch batch) const {
  check_batch(batch, num_samples());
  // a minimizes the inner residual, so the a-dependence drops out of the
  // derivative: dPsi_i/dU = P_Omega(U a - x) a^T.
  Matrix egrad = Matrix::Zero(n_, p_);
  double acc = 0.0;
  for (Index i : batch) {
    const ObservedColumn& c = train_[static_cast<std::size_t>(i)];
    const Vector a = lrmc_coeffs(u.mat(), c).a;
    const Vector r = lrmc_residual(u.mat(), c, a);
    acc += r.squaredNorm();
    for (std::size_t s = 0; s < c.rows.size(); ++s) {
      egrad.row(c.rows[s]) += r(static_cast<Index>(s)) * a.transpose();
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  return {0.5 * acc * inv, project(u, egrad * inv)};
}

KroneckerFisher LrmcProblem::fisher(const GrassmannPoint& u, Batch batch) const {
  check_batch(batch, num_samples());
  Matrix a_factor = Matrix::Zero(p_, p_);
  Vector freq = Vector::Zero(n_);
  for (Index i : batch) {
    const ObservedColumn& c = train_[static_cast<std::size_t>(i)];
    const Vector a = lrmc_coeffs(u.mat(), c).a;
    a_factor.noalias() += a * a.transpose();
    for (Index r : c.rows) freq(r) += 1.0;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  a_factor = (0.5 * inv * (a_factor + a_factor.transpose())).eval();
  freq *= inv;
  if (fisher_kind_ == LrmcFisher::Projector || (freq.array() == 1.0).all()) {
    return KroneckerFisher::with_projector_left(std::move(a_factor));
  }
  return KroneckerFisher(std::move(a_factor), freq.asDiagonal().toDenseMatrix());
}

Metrics LrmcProblem::metrics(const GrassmannPoint& u) const {
  double train_sq = 0.0;
  double test_sq = 0.0;
  for (std::size_t i = 0; i < train_.size(); ++i) {
    const Vector a = lrmc_coeffs(u.mat(), train_[i]).a;
    train_sq += lrmc_residual(u.mat(), train_[i], a).squaredNorm();
    test_sq += lrmc_residual(u.mat(), test_[i], a).squaredNorm();
  }
  const double nan = std::nan("");
  return {train_sq / static_cast<double>(train_entries_),
          test_entries_ > 0 ? test_sq / static_cast<double>(test_entries_) : nan};
}

Vector LrmcProblem::fit(const GrassmannPoint& u, Index i) const {
  const ObservedColumn& c = train_.at(static_cast<std::size_t>(i));
  const Vector a = lrmc_coeffs(u.mat(), c).a;
  return observed_rows(u.mat(), c.rows) * a;
}

Matrix LrmcProblem::fit_jacobian(const GrassmannPoint& u, Index i) const {
  const ObservedColumn& c = train_.at(static_cast<std::size_t>(i));
  const Index k = static_cast<Index>(c.rows.size());
  const Matrix uo = observed_rows(u.mat(), c.rows);
  const Matrix gram = uo.transpose() * uo;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success || k < p_) {
    throw NumericalError("fit_jacobian needs a full-rank observed block");
  }
  const Vector a = ldlt.solve(uo.transpose() * c.values);
  const Vector f = uo * a;
  // Perturbing U(r, j) with r the s-th observed row:
  //   da = G^{-1}(e_j (x_s - f_s) - a_j U_Omega(s, :)^T),  df = a_j e_s + U_Omega da.
  Matrix jac = Matrix::Zero(k, n_ * p_);
  for (Index s = 0; s < k; ++s) {
    const Index r = c.rows[static_cast<std::size_t>(s)];
    for (Index j = 0; j < p_; ++j) {
      Vector rhs = -a(j) * uo.row(s).transpose();
      rhs(j) += c.values(s) - f(s);
      Vector df = uo * ldlt.solve(rhs);
      df(s) += a(j);
      jac.col(j * n_ + r) = df;
    }
  }
  return jac;
}

DenseFisher LrmcProblem::exact_fisher(const GrassmannPoint& u, Batch batch) const {
  check_batch(batch, num_samples());
  const Index r = n_ * p_;
  Matrix acc = Matrix::Zero(r, r);
  for (Index i : batch) {
    const Matrix jac = fit_jacobian(u, i);
    acc.noalias() += jac.transpose() * jac;
  }
  acc /= static_cast<double>(batch.size());
  Matrix proj = Matrix::Identity(r, r);
  const Matrix xxT = u.projector();
  for (Index j = 0; j < p_; ++j) proj.block(j * n_, j * n_, n_, n_) -= xxT;
  Matrix f = proj * acc * proj;
  return DenseFisher(0.5 * (f + f.transpose()), n_, p_);
}

}  // namespace rngd
