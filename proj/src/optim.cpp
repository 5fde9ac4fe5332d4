#include "rngd/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rngd {

namespace {

std::vector<Index> draw_batch(Index total, Index size, Rng& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (size <= 0 || size >= total) return idx;
  // Partial Fisher-Yates; indices sorted so reductions run in a fixed order.
  for (Index i = 0; i < size; ++i) {
    std::uniform_int_distribution<Index> pick(i, total - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(size));
  std::sort(idx.begin(), idx.end());
  return idx;
}

bool is_full(Index batch, Index total) { return batch <= 0 || batch >= total; }

Index steps_per_epoch(Index batch, Index total) {
  if (is_full(batch, total)) return 1;
  return (total + batch - 1) / batch;
}

void require_finite_metrics(const Metrics& m) {
  if (!std::isfinite(m.train)) throw NumericalError("training metric became non-finite");
}

}  // namespace

void RngdConfig::validate() const {
  if (!(sigma0 > 0.0)) throw ContractViolation("sigma0 must be positive");
  if (!(sigma_min > 0.0)) throw ContractViolation("sigma_min must be positive");
  if (!(eta1 > 0.0 && eta1 < 1.0)) throw ContractViolation("eta1 must lie in (0, 1)");
  if (!(eta2 > 0.0)) throw ContractViolation("eta2 must be positive");
  if (!(gamma > 1.0)) throw ContractViolation("gamma must exceed 1");
  if (grad_batch < 0 || fisher_batch < 0 || eval_batch < 0) {
    throw ContractViolation("batch sizes must be non-negative");
  }
  if (max_epochs < 0) throw ContractViolation("max_epochs must be non-negative");
  if (!(grad_tol >= 0.0)) throw ContractViolation("grad_tol must be non-negative");
  if (fixed_step && !(step > 0.0)) throw ContractViolation("fixed step must be positive");
  if (!(solver.cg_tol > 0.0) || solver.cg_maxit < 1) throw ContractViolation("bad CG settings");
}

RngdState::RngdState(GrassmannPoint theta0, const RngdConfig& cfg)
    : theta(std::move(theta0)), sigma(cfg.sigma0), rng(cfg.seed) {}

Decision decide(double rho, double grad_norm, double sigma, const RngdConfig& cfg) {
  if (!std::isfinite(rho)) return {false, cfg.gamma * sigma};
  const double threshold = cfg.eta2 / sigma;
  const bool ratio_ok = rho >= cfg.eta1;
  const bool accept = ratio_ok && grad_norm >= threshold;
  const bool shrink = ratio_ok && grad_norm > threshold;
  return {accept, shrink ? std::max(cfg.sigma_min, sigma / cfg.gamma) : cfg.gamma * sigma};
}

StepReport rngd_step(const ModelProblem& problem, RngdState& state, const RngdConfig& cfg) {
  StepReport rep;
  rep.sigma_before = state.sigma;
  rep.sigma_after = state.sigma;
  const Index total = problem.num_samples();
  const bool full = is_full(cfg.grad_batch, total);

  const std::vector<Index> gb = draw_batch(total, cfg.grad_batch, state.rng);
  const LossGrad lg = problem.loss_grad(state.theta, gb);
  rep.grad_evals = static_cast<Index>(gb.size());
  rep.grad_norm = norm(lg.grad);
  if (!std::isfinite(rep.grad_norm)) throw NumericalError("gradient became non-finite");
  if (rep.grad_norm == 0.0 || rep.grad_norm <= cfg.grad_tol) {
    rep.stationary = true;
    return rep;
  }

  const KroneckerFisher fisher = cfg.fisher_batch == 0
                                     ? problem.fisher(state.theta, gb)
                                     : problem.fisher(state.theta, draw_batch(total, cfg.fisher_batch, state.rng));
  const double sigma = cfg.fixed_step ? cfg.sigma0 : state.sigma;
  const double lambda = sigma * rep.grad_norm;
  state.lambda = lambda;
  rep.lambda = lambda;

  const FisherOperator op = fisher;
  std::optional<SolveResult> solved;
  try {
    // sigma can overflow after a long run of rejections near stationarity.
    if (!std::isfinite(lambda)) throw NumericalError("damping overflowed");
    solved = solve_damped(op, lambda, lg.grad, cfg.solver);
  } catch (const NumericalError&) {
    rep.solver_failed = true;
  }
  if (!solved) {
    ++state.k;
    state.accepted.push_back(false);
    if (!cfg.fixed_step) {
      state.sigma = std::min(cfg.gamma * state.sigma, std::numeric_limits<double>::max());
    }
    rep.sigma_after = state.sigma;
    return rep;
  }
  const TangentVector& d = solved->d;
  rep.solver_converged = solved->converged;
  rep.solve_residual = solved->rel_residual;

  TangentVector fd = apply(op, d);
  fd += lambda * d;
  rep.model_decrease = inner(lg.grad, d) + 0.5 * inner(fd, d);

  ++state.k;
  if (cfg.fixed_step) {
    state.theta = retract(state.theta, d, cfg.step, cfg.retraction);
    rep.accepted = true;
    state.accepted.push_back(true);
    return rep;
  }

  const GrassmannPoint z = retract(state.theta, d, 1.0, cfg.retraction);
  const Index eval_size = cfg.eval_batch > 0 ? cfg.eval_batch : static_cast<Index>(gb.size());
  const std::vector<Index> eb = full ? gb : draw_batch(total, eval_size, state.rng);
  const double psi0 = problem.loss(state.theta, eb);
  const double psiz = problem.loss(z, eb);
  rep.estimated_decrease = psiz - psi0;
  rep.rho = std::abs(rep.model_decrease) < 1e-14 ? std::numeric_limits<double>::quiet_NaN()
                                                  : rep.estimated_decrease / rep.model_decrease;
  state.last_rho = rep.rho;

  const Decision dec = decide(rep.rho, rep.grad_norm, state.sigma, cfg);
  rep.accepted = dec.accept;
  if (dec.accept) state.theta = z;
  state.sigma = std::min(dec.sigma_next, std::numeric_limits<double>::max());
  rep.sigma_after = state.sigma;
  state.accepted.push_back(dec.accept);
  return rep;
}

Trace rngd_run(const ModelProblem& problem, const GrassmannPoint& theta0, const RngdConfig& cfg) {
  cfg.validate();
  RngdState state(theta0, cfg);
  Trace trace;
  const Index total = problem.num_samples();
  const Index steps = steps_per_epoch(cfg.grad_batch, total);
  double evals = 0.0;
  bool stop = false;
  for (int epoch = 1; epoch <= cfg.max_epochs && !stop; ++epoch) {
    for (Index s = 0; s < steps; ++s) {
      const StepReport rep = rngd_step(problem, state, cfg);
      evals += static_cast<double>(rep.grad_evals);
      if (rep.stationary) {
        stop = true;
        trace.converged = true;
        break;
      }
      (rep.accepted ? trace.accepted : trace.rejected) += 1;
    }
    const Metrics m = problem.metrics(state.theta);
    require_finite_metrics(m);
    trace.records.push_back({epoch, evals / static_cast<double>(total), m.train, m.test, state.sigma});
  }
  trace.final_point = state.theta;
  return trace;
}

void FirstOrderConfig::validate() const {
  if (!(step0 > 0.0)) throw ContractViolation("step size must be positive");
  if (batch < 0) throw ContractViolation("batch size must be non-negative");
  if (max_epochs < 0) throw ContractViolation("max_epochs must be non-negative");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw ContractViolation("Armijo constant must lie in (0, 1)");
  if (!(shrink > 0.0 && shrink < 1.0)) throw ContractViolation("backtracking factor must lie in (0, 1)");
  if (max_backtracks < 1) throw ContractViolation("max_backtracks must be positive");
}

double rsgd_step_size(double eta0, long k) { return eta0 / (1.0 + eta0 * static_cast<double>(k) / 10.0); }

GrassmannPoint rsgd_step(const ModelProblem& problem, const GrassmannPoint& theta, double eta,
                         Batch batch, RetractionKind kind) {
  const TangentVector g = problem.loss_grad(theta, batch).grad;
  return retract(theta, g, -eta, kind);
}

Trace rsgd_run(const ModelProblem& problem, const GrassmannPoint& theta0, const FirstOrderConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Trace trace;
  GrassmannPoint theta = theta0;
  const Index total = problem.num_samples();
  const Index steps = steps_per_epoch(cfg.batch, total);
  long k = 0;
  double evals = 0.0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (Index s = 0; s < steps; ++s) {
      const std::vector<Index> b = draw_batch(total, cfg.batch, rng);
      theta = rsgd_step(problem, theta, rsgd_step_size(cfg.step0, k), b, cfg.retraction);
      evals += static_cast<double>(b.size());
      ++k;
    }
    const Metrics m = problem.metrics(theta);
    require_finite_metrics(m);
    trace.records.push_back(
        {epoch, evals / static_cast<double>(total), m.train, m.test, rsgd_step_size(cfg.step0, k)});
  }
  trace.accepted = k;
  trace.final_point = theta;
  return trace;
}

Trace rgd_run(const ModelProblem& problem, const GrassmannPoint& theta0, const FirstOrderConfig& cfg) {
  cfg.validate();
  Trace trace;
  GrassmannPoint theta = theta0;
  const std::vector<Index> all = problem.all_indices();
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const TangentVector g = problem.loss_grad(theta, all).grad;
    theta = retract(theta, g, -cfg.step0, cfg.retraction);
    const Metrics m = problem.metrics(theta);
    require_finite_metrics(m);
    trace.records.push_back({epoch, static_cast<double>(epoch), m.train, m.test, cfg.step0});
  }
  trace.accepted = cfg.max_epochs;
  trace.final_point = theta;
  return trace;
}

Trace rsvrg_run(const ModelProblem& problem, const GrassmannPoint& theta0, const FirstOrderConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Trace trace;
  GrassmannPoint theta = theta0;
  const Index total = problem.num_samples();
  const std::vector<Index> all = problem.all_indices();
  const Index inner_steps = steps_per_epoch(cfg.batch, total);
  double evals = 0.0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const GrassmannPoint snapshot = theta;
    const TangentVector full = problem.loss_grad(snapshot, all).grad;
    evals += static_cast<double>(total);
    for (Index s = 0; s < inner_steps; ++s) {
      const std::vector<Index> b = draw_batch(total, cfg.batch, rng);
      const TangentVector g_now = problem.loss_grad(theta, b).grad;
      const TangentVector g_old = problem.loss_grad(snapshot, b).grad;
      TangentVector v = g_now;
      v -= project(theta, g_old.mat());
      v += project(theta, full.mat());
      theta = retract(theta, v, -cfg.step0, cfg.retraction);
      evals += 2.0 * static_cast<double>(b.size());
    }
    const Metrics m = problem.metrics(theta);
    require_finite_metrics(m);
    trace.records.push_back({epoch, evals / static_cast<double>(total), m.train, m.test, cfg.step0});
  }
  trace.accepted = static_cast<long>(cfg.max_epochs) * inner_steps;
  trace.final_point = theta;
  return trace;
}

Trace rcg_run(const ModelProblem& problem, const GrassmannPoint& theta0, const FirstOrderConfig& cfg) {
  cfg.validate();
  Trace trace;
  const std::vector<Index> all = problem.all_indices();
  GrassmannPoint theta = theta0;
  LossGrad cur = problem.loss_grad(theta, all);
  TangentVector dir = -cur.grad;
  double t_prev = cfg.step0 / 2.0;
  for (int it = 1; it <= cfg.max_epochs; ++it) {
    if (norm(cur.grad) == 0.0) {
      trace.converged = true;
      break;
    }
    double slope = inner(cur.grad, dir);
    if (!(slope < 0.0)) {
      dir = -cur.grad;
      slope = inner(cur.grad, dir);
    }
    double t = 2.0 * t_prev;
    std::optional<GrassmannPoint> next;
    for (int b = 0; b < cfg.max_backtracks; ++b) {
      GrassmannPoint cand = retract(theta, dir, t, cfg.retraction);
      if (problem.loss(cand, all) <= cur.value + cfg.armijo_c * t * slope) {
        next = std::move(cand);
        break;
      }
      t *= cfg.shrink;
    }
    if (!next) {
      ++trace.rejected;
      break;
    }
    t_prev = t;
    const LossGrad nxt = problem.loss_grad(*next, all);
    const TangentVector moved_dir = project(*next, dir.mat());
    const TangentVector moved_grad = project(*next, cur.grad.mat());
    const TangentVector y = nxt.grad - moved_grad;
    const double denom = inner(moved_dir, y);
    const double beta = denom != 0.0 ? std::max(0.0, inner(nxt.grad, y) / denom) : 0.0;
    dir = -nxt.grad + beta * moved_dir;
    theta = *next;
    cur = nxt;
    ++trace.accepted;
    const Metrics m = problem.metrics(theta);
    require_finite_metrics(m);
    trace.records.push_back({it, static_cast<double>(it), m.train, m.test, t});
  }
  trace.final_point = theta;
  return trace;
}

DeterministicStep deterministic_rngd_step(const TwoLayerBnNet& net, const NetData& data,
                                          const UnitRowPoint& theta, double t) {
  if (!std::isfinite(t)) throw ContractViolation("step size must be finite");
  const Vector r = net.outputs(theta, data.x) - data.y;
  DeterministicStep out{theta, r.norm(), 1.0, false};
  if (out.residual == 0.0 || t == 0.0) return out;

  const JacobianOperator jac = net.jacobian(theta, data.x);
  Matrix gram = jac.gram();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  out.gram_cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(out.gram_cond <= 1e12)) {
    gram.diagonal().array() += 1e-10 * gram.trace() / static_cast<double>(gram.rows());
    out.ridge_added = true;
  }
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) throw NumericalError("J J^T factorization failed");
  const Vector c = ldlt.solve(r);
  if (!c.allFinite()) throw NumericalError("pseudo-inverse step produced non-finite values");
  const UnitRowTangent d = jac.adjoint(c);
  out.theta = exp_map(theta, d, -t);
  return out;
}

ResidualTrace nn_ngd_run(const TwoLayerBnNet& net, const NetData& data, const UnitRowPoint& theta0,
                         double t, int steps) {
  if (steps < 0) throw ContractViolation("step count must be non-negative");
  ResidualTrace trace{{}, theta0, false};
  for (int k = 0; k < steps; ++k) {
    const DeterministicStep s = deterministic_rngd_step(net, data, trace.final_theta, t);
    trace.residuals.push_back(s.residual);
    trace.ridge_used = trace.ridge_used || s.ridge_added;
    trace.final_theta = s.theta;
  }
  trace.residuals.push_back((net.outputs(trace.final_theta, data.x) - data.y).norm());
  return trace;
}

}  // namespace rngd
