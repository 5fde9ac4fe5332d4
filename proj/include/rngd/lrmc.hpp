#pragma once

// Low-rank matrix completion on Gr(n, p). Each column x_i of the n x N data
// matrix is observed on a row subset; a(U; x) is the least-squares fit on the
// observed rows and Psi(U) = (1/2N) sum ||P_Omega(U a - x)||^2.

#include <vector>

#include "rngd/problem.hpp"

namespace rngd {

struct ObservedColumn {
  std::vector<Index> rows;
  Vector values;
};

struct ColumnFit {
  Vector a;
  /// Observed block U_Omega had numerical rank < p; `a` is then minimum-norm.
  bool rank_deficient = false;
};

ColumnFit lrmc_coeffs(const Matrix& u, const ObservedColumn& col);

/// Residual P_Omega(U a - x) on the observed rows.
Vector lrmc_residual(const Matrix& u, const ObservedColumn& col, const Vector& a);

/// Left factor of the Kronecker Fisher. Projector is the fully observed form
/// (mean a a^T) (x) (I - U U^T); Observed replaces the identity by the batch's
/// per-row observation frequencies, P diag(freq) P, and equals Projector when
/// every row of every batch column is observed.
enum class LrmcFisher { Observed, Projector };

class LrmcProblem final : public ModelProblem {
 public:
  /// `train` and `test` hold the same number of columns; either may have
  /// empty columns. Columns with fewer than p train rows are counted in
  /// short_columns().
  LrmcProblem(Index n, Index p, std::vector<ObservedColumn> train, std::vector<ObservedColumn> test,
              LrmcFisher fisher_kind = LrmcFisher::Observed);

  std::string name() const override { return "lrmc"; }
  Index num_samples() const override { return static_cast<Index>(train_.size()); }
  Index n() const override { return n_; }
  Index p() const override { return p_; }

  double loss(const GrassmannPoint& u, Batch batch) const override;
  LossGrad loss_grad(const GrassmannPoint& u, Batch batch) const override;
  /// a_factor = mean a a^T; left factor per fisher_kind().
  KroneckerFisher fisher(const GrassmannPoint& u, Batch batch) const override;
  /// Train and test MSE over observed entries, coefficients fitted on train.
  Metrics metrics(const GrassmannPoint& u) const override;

  /// Per-sample Jacobian of the observed fit f_i(U) = U_Omega a(U; x_i) with
  /// respect to ambient U, as a |Omega_i| x (n p) matrix in vec coordinates.
  Matrix fit_jacobian(const GrassmannPoint& u, Index i) const;
  /// Fitted values on the observed rows of column i.
  Vector fit(const GrassmannPoint& u, Index i) const;
  /// Exact Fisher of the unit-variance Gaussian model on the observed fit:
  /// (1/|batch|) sum P J_i^T J_i P.
  DenseFisher exact_fisher(const GrassmannPoint& u, Batch batch) const;

  LrmcFisher fisher_kind() const noexcept { return fisher_kind_; }
  void set_fisher_kind(LrmcFisher kind) noexcept { fisher_kind_ = kind; }

  const std::vector<ObservedColumn>& train() const noexcept { return train_; }
  const std::vector<ObservedColumn>& test() const noexcept { return test_; }
  Index train_entries() const noexcept { return train_entries_; }
  Index test_entries() const noexcept { return test_entries_; }
  /// Train columns with fewer than p observed rows (their fit is minimum-norm).
  Index short_columns() const noexcept { return short_columns_; }

 private:
  Index n_;
  Index p_;
  std::vector<ObservedColumn> train_;
  std::vector<ObservedColumn> test_;
  Index train_entries_ = 0;
  Index test_entries_ = 0;
  Index short_columns_ = 0;
  LrmcFisher fisher_kind_;
};

}  // namespace rngd
