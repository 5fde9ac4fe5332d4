#pragma once

// Multi-task low-dimensional subspace learning. Task i has design X_i (d_i x n)
// and response y_i; its weights live in a shared p-dimensional feature
// subspace, w_i = argmin (1/2)||X_i U w - y_i||^2 + ridge term.

#include <vector>

#include "rngd/problem.hpp"

namespace rngd {

struct Task {
  Matrix x;
  Vector y;
};

/// Solves U^T X^T (X U w - y) + lambda w = 0.
Vector msl_coeffs(const Matrix& u, const Task& task, double lambda);

enum class MslGradient { Exact, Approximate };

class SubspaceLearningProblem final : public ModelProblem {
 public:
  /// `train` and `test` list the same tasks; test tasks may have no rows.
  SubspaceLearningProblem(Index p, double lambda, std::vector<Task> train, std::vector<Task> test,
                          MslGradient mode = MslGradient::Exact);

  std::string name() const override { return "subspace"; }
  Index num_samples() const override { return static_cast<Index>(train_.size()); }
  Index n() const override { return n_; }
  Index p() const override { return p_; }
  double lambda() const noexcept { return lambda_; }
  MslGradient gradient_mode() const noexcept { return mode_; }

  /// (1/2|batch|) sum ||X_i U w_i - y_i||^2.
  double loss(const GrassmannPoint& u, Batch batch) const override;
  /// Exact mode differentiates through w_i; approximate mode returns
  /// P X^T (X U w - y) w^T, treating w as fixed.
  LossGrad loss_grad(const GrassmannPoint& u, Batch batch) const override;
  /// [mean w w^T] (x) [mean P X^T X P].
  KroneckerFisher fisher(const GrassmannPoint& u, Batch batch) const override;
  /// Mean per-task NMSE ||X U w - y||^2 / ||y||^2 on train and test rows,
  /// weights fitted on train rows. Tasks with y = 0 are skipped.
  Metrics metrics(const GrassmannPoint& u) const override;

  const std::vector<Task>& train() const noexcept { return train_; }
  const std::vector<Task>& test() const noexcept { return test_; }

 private:
  Index n_ = 0;
  Index p_;
  double lambda_;
  std::vector<Task> train_;
  std::vector<Task> test_;
  MslGradient mode_;
};

}  // namespace rngd
