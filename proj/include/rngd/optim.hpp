#pragma once

// Riemannian natural gradient descent with adaptive damping, its deterministic
// pseudo-inverse variant for the batch-normalized network, and first-order
// Riemannian baselines.

#include <cstdint>
#include <optional>
#include <vector>

#include "rngd/bn_net.hpp"
#include "rngd/fisher.hpp"
#include "rngd/problem.hpp"

namespace rngd {

struct RngdConfig {
  double sigma0 = 1.0;
  double sigma_min = 1e-4;
  double eta1 = 0.1;
  double eta2 = 1.0;
  double gamma = 2.0;
  /// 0 means the full dataset.
  Index grad_batch = 0;
  /// 0 reuses the gradient batch; otherwise an independent draw of this size.
  Index fisher_batch = 0;
  /// 0 means the gradient batch size. Always an independent draw unless the
  /// gradient batch is the full dataset, in which case evaluations are exact.
  Index eval_batch = 0;
  RetractionKind retraction = RetractionKind::Polar;
  SolveOptions solver{};
  int max_epochs = 50;
  /// Stop once ||g|| <= grad_tol (0 disables).
  double grad_tol = 0.0;
  std::uint64_t seed = 0;
  /// Skip the ratio test: theta+ = R(t d) with lambda = sigma0 ||g||.
  bool fixed_step = false;
  double step = 0.05;

  /// Throws ContractViolation when a bound is violated.
  void validate() const;
};

struct RngdState {
  RngdState(GrassmannPoint theta0, const RngdConfig& cfg);

  GrassmannPoint theta;
  double sigma;
  double lambda = 0.0;
  long k = 0;
  Rng rng;
  double last_rho = 0.0;
  std::vector<bool> accepted;
};

struct StepReport {
  double rho = 0.0;
  double grad_norm = 0.0;
  double lambda = 0.0;
  /// m_k(d) - Psi_k^0.
  double model_decrease = 0.0;
  /// Psi_k^z - Psi_k^0.
  double estimated_decrease = 0.0;
  bool accepted = false;
  bool stationary = false;
  bool solver_failed = false;
  bool solver_converged = true;
  double solve_residual = 0.0;
  double sigma_before = 0.0;
  double sigma_after = 0.0;
  /// Per-sample gradient evaluations spent on this step.
  Index grad_evals = 0;
};

struct Decision {
  bool accept;
  double sigma_next;
};

/// Acceptance and damping update. theta moves iff rho >= eta1 and
/// ||g|| >= eta2/sigma; sigma shrinks (floored at sigma_min) iff rho >= eta1
/// and ||g|| > eta2/sigma, otherwise grows by gamma. A non-finite rho rejects.
Decision decide(double rho, double grad_norm, double sigma, const RngdConfig& cfg);

StepReport rngd_step(const ModelProblem& problem, RngdState& state, const RngdConfig& cfg);

struct EpochRecord {
  int epoch;
  double grad_per_n;
  double train;
  double test;
  double sigma;
};

struct Trace {
  std::vector<EpochRecord> records;
  std::optional<GrassmannPoint> final_point;
  long accepted = 0;
  long rejected = 0;
  /// True when a gradient-norm stop fired before max_epochs.
  bool converged = false;
};

/// One record per epoch (ceil(N / batch) steps). Deterministic given the seed.
Trace rngd_run(const ModelProblem& problem, const GrassmannPoint& theta0, const RngdConfig& cfg);

struct FirstOrderConfig {
  double step0 = 0.1;
  Index batch = 0;  // 0 means the full dataset
  int max_epochs = 50;
  RetractionKind retraction = RetractionKind::Polar;
  std::uint64_t seed = 0;
  /// RCG only: Armijo constant, backtracking factor and backtracking limit.
  double armijo_c = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 60;

  void validate() const;
};

/// eta_k = eta0 / (1 + eta0 k / 10).
double rsgd_step_size(double eta0, long k);

/// theta+ = R(-eta g).
GrassmannPoint rsgd_step(const ModelProblem& problem, const GrassmannPoint& theta, double eta,
                         Batch batch, RetractionKind kind);

Trace rsgd_run(const ModelProblem& problem, const GrassmannPoint& theta0, const FirstOrderConfig& cfg);
/// Full-batch gradient descent with the fixed step step0.
Trace rgd_run(const ModelProblem& problem, const GrassmannPoint& theta0, const FirstOrderConfig& cfg);
/// Outer full gradient, then N / batch corrected inner steps with fixed step0;
/// stored gradients are moved by projection. One record per outer loop.
Trace rsvrg_run(const ModelProblem& problem, const GrassmannPoint& theta0, const FirstOrderConfig& cfg);
/// Full-batch nonlinear CG (Hestenes-Stiefel+, projection transport, Armijo
/// backtracking from twice the last accepted step). One record per iteration.
Trace rcg_run(const ModelProblem& problem, const GrassmannPoint& theta0, const FirstOrderConfig& cfg);

struct DeterministicStep {
  UnitRowPoint theta;
  /// ||u(theta) - y|| before the step.
  double residual = 0.0;
  /// Condition number of J J^T and whether a ridge was added to invert it.
  double gram_cond = 0.0;
  bool ridge_added = false;
};

/// Square loss: d = J^T (J J^T)^{-1} (u - y), theta+ = exp(theta, -t d) per row.
DeterministicStep deterministic_rngd_step(const TwoLayerBnNet& net, const NetData& data,
                                          const UnitRowPoint& theta, double t);

struct ResidualTrace {
  /// ||u^k - y|| for k = 0..K.
  std::vector<double> residuals;
  UnitRowPoint final_theta;
  bool ridge_used = false;
};

ResidualTrace nn_ngd_run(const TwoLayerBnNet& net, const NetData& data, const UnitRowPoint& theta0,
                         double t, int steps);

}  // namespace rngd
