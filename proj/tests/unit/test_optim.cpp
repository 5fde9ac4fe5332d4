#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rngd/data.hpp"
#include "rngd/optim.hpp"

using namespace rngd;

namespace {

// psi_i(u) = (1/2)(x_i^T u)^2 on Gr(n, 1); Fisher factor mean P x x^T P.
class Rayleigh : public ModelProblem {
 public:
  Rayleigh(Matrix x, bool frozen_loss = false) : x_(std::move(x)), frozen_(frozen_loss) {}

  std::string name() const override { return "rayleigh"; }
  Index num_samples() const override { return x_.cols(); }
  Index n() const override { return x_.rows(); }
  Index p() const override { return 1; }

  double loss(const GrassmannPoint& u, Batch b) const override {
    if (frozen_) return 1.0;
    double s = 0.0;
    for (Index i : b) s += 0.5 * std::pow(x_.col(i).dot(u.mat().col(0)), 2);
    return s / static_cast<double>(b.size());
  }
  LossGrad loss_grad(const GrassmannPoint& u, Batch b) const override {
    Matrix g = Matrix::Zero(n(), 1);
    for (Index i : b) g += x_.col(i) * x_.col(i).dot(u.mat().col(0));
    g /= static_cast<double>(b.size());
    return {loss(u, b), project(u, g)};
  }
  KroneckerFisher fisher(const GrassmannPoint& u, Batch b) const override {
    const Matrix pn = Matrix::Identity(n(), n()) - u.projector();
    Matrix g = Matrix::Zero(n(), n());
    for (Index i : b) g += pn * x_.col(i) * x_.col(i).transpose() * pn;
    g /= static_cast<double>(b.size());
    return KroneckerFisher(Matrix::Identity(1, 1), 0.5 * (g + g.transpose()));
  }
  Metrics metrics(const GrassmannPoint& u) const override { return {loss(u, all_indices()), 0.0}; }

 private:
  Matrix x_;
  bool frozen_;
};

Rayleigh make_rayleigh(Index n, Index samples, std::uint64_t seed, bool frozen = false) {
  Rng rng(seed);
  return Rayleigh(oracle::gaussian(n, samples, rng), frozen);
}

TEST(Decide, AcceptAndShrink) {
  RngdConfig cfg;
  cfg.sigma_min = 1e-4;
  const Decision d = decide(0.5, 1.0, 10.0, cfg);
  EXPECT_TRUE(d.accept);
  EXPECT_EQ(d.sigma_next, 5.0);
}

TEST(Decide, SmallRatioRejectsAndGrows) {
  RngdConfig cfg;
  const Decision d = decide(0.0, 1.0, 10.0, cfg);
  EXPECT_FALSE(d.accept);
  EXPECT_EQ(d.sigma_next, 20.0);
}

TEST(Decide, SmallGradientRejects) {
  RngdConfig cfg;
  const Decision d = decide(0.9, 0.05, 10.0, cfg);
  EXPECT_FALSE(d.accept);
  EXPECT_EQ(d.sigma_next, 20.0);
}

// At ||g|| = eta2 / sigma theta moves but sigma takes the growth branch.
TEST(Decide, EqualityAcceptsAndGrows) {
  RngdConfig cfg;
  const Decision d = decide(0.5, 0.5, 2.0, cfg);
  EXPECT_TRUE(d.accept);
  EXPECT_EQ(d.sigma_next, 4.0);
}

TEST(Decide, FloorAndNonFiniteRatio) {
  RngdConfig cfg;
  cfg.sigma_min = 1e-4;
  EXPECT_EQ(decide(1.0, 1e9, 1.5e-4, cfg).sigma_next, 1e-4);
  const Decision d = decide(std::nan(""), 1.0, 3.0, cfg);
  EXPECT_FALSE(d.accept);
  EXPECT_EQ(d.sigma_next, 6.0);
}

TEST(Decide, RatioBoundaryIsInclusive) {
  RngdConfig cfg;
  EXPECT_TRUE(decide(cfg.eta1, 10.0, 1.0, cfg).accept);
  EXPECT_FALSE(decide(std::nextafter(cfg.eta1, 0.0), 10.0, 1.0, cfg).accept);
}

TEST(RngdConfig, Validation) {
  RngdConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.gamma = 1.0;
  EXPECT_THROW(cfg.validate(), ContractViolation);
  cfg = {};
  cfg.eta1 = 1.0;
  EXPECT_THROW(cfg.validate(), ContractViolation);
  cfg = {};
  cfg.sigma_min = 0.0;
  EXPECT_THROW(cfg.validate(), ContractViolation);
}

TEST(RngdStep, RejectionWhenEstimatedDecreaseIsZero) {
  const Rayleigh prob = make_rayleigh(6, 10, 1, true);
  Rng rng(2);
  RngdConfig cfg;
  cfg.sigma0 = 3.0;
  RngdState state(random_point(6, 1, rng), cfg);
  const GrassmannPoint before = state.theta;
  const StepReport rep = rngd_step(prob, state, cfg);
  EXPECT_EQ(rep.rho, 0.0);
  EXPECT_FALSE(rep.accepted);
  EXPECT_EQ(state.sigma, 6.0);
  EXPECT_EQ((state.theta.mat() - before.mat()).norm(), 0.0);
}

TEST(RngdStep, DampingIsSigmaTimesGradNorm) {
  const Rayleigh prob = make_rayleigh(6, 10, 3);
  Rng rng(4);
  RngdConfig cfg;
  cfg.sigma0 = 2.5;
  RngdState state(random_point(6, 1, rng), cfg);
  const StepReport rep = rngd_step(prob, state, cfg);
  EXPECT_EQ(rep.lambda, 2.5 * rep.grad_norm);
  EXPECT_EQ(state.lambda, rep.lambda);
}

// The quadratic model with exact Fisher, closed form; its decrease is negative.
// The model carries the damping term, so m - Psi0 = -(1/2) g^T (F + lambda)^{-1} g
// while the actual decrease tends to -g^T (F + lambda)^{-1} g: rho tends to 2.
TEST(RngdStep, ModelDecreaseAndRatioOnQuadratic) {
  const Rayleigh prob = make_rayleigh(5, 40, 5);
  Rng rng(6);
  const GrassmannPoint u0 = random_point(5, 1, rng);
  const auto all = prob.all_indices();
  double last_gap = 1e9;
  for (double sigma : {1.0, 10.0, 100.0, 1000.0}) {
    RngdConfig cfg;
    cfg.sigma0 = sigma;
    RngdState state(u0, cfg);
    const StepReport rep = rngd_step(prob, state, cfg);
    EXPECT_LT(rep.model_decrease, 0.0);

    const Matrix g = prob.loss_grad(u0, all).grad.mat();
    const Matrix f = prob.fisher(u0, all).g_factor();
    const double lambda = sigma * g.norm();
    const Vector d = -(f + lambda * Matrix::Identity(5, 5)).fullPivLu().solve(g.col(0));
    const double model = g.col(0).dot(d) + 0.5 * d.dot((f + lambda * Matrix::Identity(5, 5)) * d);
    EXPECT_NEAR(rep.model_decrease, model, 1e-12 * std::abs(model) + 1e-15);

    const double gap = std::abs(rep.rho - 2.0);
    EXPECT_LT(gap, last_gap + 1e-12);
    last_gap = gap;
  }
  EXPECT_LT(last_gap, 0.05);
}

TEST(RngdStep, StationaryPointStops) {
  // Samples orthogonal to e1 make u = e1 a critical point.
  Matrix x = Matrix::Zero(4, 3);
  x.bottomRows(3) = Matrix::Identity(3, 3);
  const Rayleigh prob(x);
  RngdConfig cfg;
  RngdState state(GrassmannPoint(Matrix::Identity(4, 1)), cfg);
  const StepReport rep = rngd_step(prob, state, cfg);
  EXPECT_TRUE(rep.stationary);
  EXPECT_EQ(state.k, 0);
}

TEST(RngdRun, ZeroEpochsKeepsStart) {
  const Rayleigh prob = make_rayleigh(5, 8, 7);
  Rng rng(8);
  const GrassmannPoint u0 = random_point(5, 1, rng);
  RngdConfig cfg;
  cfg.max_epochs = 0;
  const Trace t = rngd_run(prob, u0, cfg);
  EXPECT_TRUE(t.records.empty());
  EXPECT_EQ((t.final_point->mat() - u0.mat()).norm(), 0.0);
}

TEST(RngdRun, SameSeedSameTrace) {
  const Rayleigh prob = make_rayleigh(8, 60, 9);
  Rng rng(10);
  const GrassmannPoint u0 = random_point(8, 1, rng);
  RngdConfig cfg;
  cfg.grad_batch = 7;
  cfg.max_epochs = 5;
  cfg.seed = 42;
  const Trace a = rngd_run(prob, u0, cfg);
  const Trace b = rngd_run(prob, u0, cfg);
  ASSERT_EQ(a.records.size(), 5u);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].train, b.records[i].train);
    EXPECT_EQ(a.records[i].sigma, b.records[i].sigma);
    EXPECT_EQ(a.records[i].grad_per_n, b.records[i].grad_per_n);
  }
  EXPECT_EQ(a.final_point->mat(), b.final_point->mat());
}

// Full batch: evaluations are exact, so every accepted step decreases Psi,
// sigma stays above its floor after acceptances and grows by gamma on rejections.
TEST(RngdRun, FullBatchInvariants) {
  const Rayleigh prob = make_rayleigh(6, 30, 11);
  Rng rng(12);
  RngdConfig cfg;
  RngdState state(random_point(6, 1, rng), cfg);
  const auto all = prob.all_indices();
  int accepted = 0;
  for (int k = 0; k < 40; ++k) {
    const double before = prob.loss(state.theta, all);
    const StepReport rep = rngd_step(prob, state, cfg);
    if (rep.stationary) break;
    EXPECT_LE(rep.model_decrease, 0.0);
    EXPECT_EQ(rep.accepted, rep.rho >= cfg.eta1 && rep.grad_norm >= cfg.eta2 / rep.sigma_before);
    if (rep.accepted) {
      ++accepted;
      EXPECT_LE(prob.loss(state.theta, all), before);
    } else {
      EXPECT_EQ(rep.sigma_after, cfg.gamma * rep.sigma_before);
    }
    EXPECT_GE(state.sigma, cfg.sigma_min);
  }
  EXPECT_GT(accepted, 0);
}

TEST(RngdRun, FixedStepMovesAlongScaledDirection) {
  const Rayleigh prob = make_rayleigh(5, 10, 13);
  Rng rng(14);
  const GrassmannPoint u0 = random_point(5, 1, rng);
  RngdConfig cfg;
  cfg.fixed_step = true;
  cfg.step = 0.3;
  RngdState state(u0, cfg);
  rngd_step(prob, state, cfg);
  const auto all = prob.all_indices();
  const TangentVector g = prob.loss_grad(u0, all).grad;
  const SolveResult s = solve_damped(prob.fisher(u0, all), cfg.sigma0 * norm(g), g);
  EXPECT_LT(subspace_dist(state.theta, retract(u0, s.d, 0.3, cfg.retraction)), 1e-13);
}

TEST(FirstOrder, RsgdSchedule) {
  EXPECT_DOUBLE_EQ(rsgd_step_size(2.0, 10), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(rsgd_step_size(0.5, 0), 0.5);
}

TEST(FirstOrder, RsgdStepIsRetractedGradientStep) {
  const Rayleigh prob = make_rayleigh(5, 10, 15);
  Rng rng(16);
  const GrassmannPoint u = random_point(5, 1, rng);
  const std::vector<Index> batch{1, 4, 6};
  const GrassmannPoint next = rsgd_step(prob, u, 0.2, batch, RetractionKind::Polar);
  const Matrix g = prob.loss_grad(u, batch).grad.mat();
  const Matrix expected = (u.mat() - 0.2 * g).normalized();
  EXPECT_LT((next.projector() - expected * expected.transpose()).norm(), 1e-13);
}

TEST(FirstOrder, RsvrgFullBatchEqualsRgd) {
  const Rayleigh prob = make_rayleigh(6, 20, 17);
  Rng rng(18);
  const GrassmannPoint u0 = random_point(6, 1, rng);
  FirstOrderConfig cfg;
  cfg.step0 = 0.05;
  cfg.max_epochs = 15;
  const Trace a = rgd_run(prob, u0, cfg);
  const Trace b = rsvrg_run(prob, u0, cfg);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_NEAR(a.records[i].train, b.records[i].train, 1e-12);
  }
  EXPECT_LT(subspace_dist(*a.final_point, *b.final_point), 1e-12);
}

TEST(FirstOrder, RgdMatchesHandIteration) {
  const Rayleigh prob = make_rayleigh(4, 12, 19);
  Rng rng(20);
  const GrassmannPoint u0 = random_point(4, 1, rng);
  FirstOrderConfig cfg;
  cfg.step0 = 0.1;
  cfg.max_epochs = 3;
  const Trace t = rgd_run(prob, u0, cfg);
  Vector u = u0.mat().col(0);
  const auto all = prob.all_indices();
  for (int k = 0; k < 3; ++k) {
    const Matrix g = prob.loss_grad(GrassmannPoint(Matrix(u)), all).grad.mat();
    u = (u - 0.1 * g.col(0)).normalized();
    EXPECT_NEAR(t.records[static_cast<std::size_t>(k)].train, prob.loss(GrassmannPoint(Matrix(u)), all), 1e-13);
  }
}

TEST(FirstOrder, RcgDecreasesMonotonically) {
  const Rayleigh prob = make_rayleigh(10, 40, 21);
  Rng rng(22);
  FirstOrderConfig cfg;
  cfg.step0 = 0.5;
  cfg.max_epochs = 30;
  const GrassmannPoint u0 = random_point(10, 1, rng);
  const Trace t = rcg_run(prob, u0, cfg);
  double last = prob.loss(u0, prob.all_indices());
  for (const EpochRecord& r : t.records) {
    EXPECT_LE(r.train, last + 1e-15);
    last = r.train;
  }
  // Converges to the smallest eigenvalue of the sample second moment.
  Matrix x(10, 40);
  Rng again(21);
  x = oracle::gaussian(10, 40, again);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(x * x.transpose() / 40.0);
  EXPECT_NEAR(last, 0.5 * eig.eigenvalues()(0), 1e-6);
}

TEST(FirstOrder, ConfigValidation) {
  FirstOrderConfig cfg;
  cfg.step0 = 0.0;
  EXPECT_THROW(cfg.validate(), ContractViolation);
  cfg = {};
  cfg.armijo_c = 1.0;
  EXPECT_THROW(cfg.validate(), ContractViolation);
}

// --- deterministic pseudo-inverse step on the network ---

struct Net {
  TwoLayerBnNet net;
  NetData data;
  UnitRowPoint theta;
};

Net small_net(Index m, std::uint64_t seed) {
  const SynthNet s = synth_nn(6, 5, seed);
  Rng rng(seed + 1);
  return {TwoLayerBnNet::with_sphere_moments(random_signs(m, rng), 6), s.data, random_unit_rows(m, 6, rng)};
}

TEST(DeterministicStep, ZeroStepAndZeroResidual) {
  Net c = small_net(64, 1);
  const DeterministicStep s0 = deterministic_rngd_step(c.net, c.data, c.theta, 0.0);
  EXPECT_EQ((s0.theta.mat() - c.theta.mat()).norm(), 0.0);
  c.data.y = c.net.outputs(c.theta, c.data.x);
  const DeterministicStep s1 = deterministic_rngd_step(c.net, c.data, c.theta, 1.0);
  EXPECT_EQ(s1.residual, 0.0);
  EXPECT_LT((s1.theta.mat() - c.theta.mat()).norm(), 1e-15);
}

// d = J^T (J J^T)^{-1} (u - y), and theta+ = exp(-t d), from dense matrices.
TEST(DeterministicStep, MatchesDensePseudoInverse) {
  const Net c = small_net(32, 2);
  const JacobianOperator jac = c.net.jacobian(c.theta, c.data.x);
  Matrix j(jac.rows(), 32 * 6);
  for (Index i = 0; i < jac.rows(); ++i) {
    const Matrix& r = jac.row(i);
    j.row(i) = Eigen::Map<const Vector>(r.data(), r.size()).transpose();
  }
  const Vector res = c.net.outputs(c.theta, c.data.x) - c.data.y;
  const Vector dvec = j.transpose() * (j * j.transpose()).ldlt().solve(res);
  const Matrix d = Eigen::Map<const Matrix>(dvec.data(), 32, 6);
  const DeterministicStep s = deterministic_rngd_step(c.net, c.data, c.theta, 0.5);
  EXPECT_NEAR(s.residual, res.norm(), 1e-13);
  for (Index r = 0; r < 32; ++r) {
    const Vector t = c.theta.mat().row(r).transpose();
    const Vector v = -d.row(r).transpose();
    const double nv = v.norm();
    const Vector expected = nv > 0 ? Vector(t * std::cos(0.5 * nv) + v / nv * std::sin(0.5 * nv)) : t;
    EXPECT_LT((s.theta.mat().row(r).transpose() - expected).norm(), 1e-10);
  }
}

TEST(DeterministicStep, ResidualShrinks) {
  const Net c = small_net(512, 3);
  const ResidualTrace t = nn_ngd_run(c.net, c.data, c.theta, 0.1, 20);
  ASSERT_EQ(t.residuals.size(), 21u);
  for (std::size_t k = 0; k + 1 < t.residuals.size(); ++k) {
    EXPECT_LE(t.residuals[k + 1], (1.0 - 0.05) * t.residuals[k] + 1e-3 * t.residuals[k]);
  }
}

}  // namespace
