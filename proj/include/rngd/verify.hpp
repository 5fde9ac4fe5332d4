#pragma once

// Executable checks of the geometric, curvature and convergence properties the
// method relies on. Every check is a deterministic function of its seed.

#include <cstdint>
#include <string>
#include <vector>

#include "rngd/optim.hpp"

namespace rngd {

struct Measurement {
  enum class Rel { Le, Ge, In, Info };

  std::string name;
  double value;
  Rel rel;
  double lo;
  double hi;

  bool ok() const;
};

struct CheckReport {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<Measurement> values;
  std::vector<std::string> notes;

  void le(std::string what, double value, double hi);
  void ge(std::string what, double value, double lo);
  void in(std::string what, double value, double lo, double hi);
  void info(std::string what, double value);

  /// True iff every measurement lies within its threshold.
  bool passed() const;
};

/// One CSV row per measurement: check,status,measure,value,relation,lo,hi,seed.
std::string reports_csv(const std::vector<CheckReport>& reports);
/// One line per check plus its failing measurements.
std::string reports_summary(const std::vector<CheckReport>& reports);

/// Log-log least-squares slope of ys against xs.
double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

/// Retraction orders over t in {1e-1, ..., 1e-4} for `cases` random unit
/// tangents, projection idempotency and self-adjointness, and the exponential
/// map distance bound.
CheckReport check_geometry(std::uint64_t seed, int cases = 20, Index n = 20, Index p = 4);

/// Central finite differences of Psi o R along random unit tangents for the
/// completion, subspace-learning (exact mode) and network gradients.
CheckReport check_gradients(std::uint64_t seed, int directions = 10);

/// Kronecker vs dense empirical Fisher on one rank-one completion sample and
/// on heterogeneous batches (logged only).
CheckReport check_fisher_consistency(std::uint64_t seed);

/// Factored and CG damped solves on random Kronecker instances.
CheckReport check_damped_solve(std::uint64_t seed, Index n = 6, Index p = 3);

/// Scripted (rho, ||g||) trace: decide() against a literal transcription of
/// the acceptance and damping rules.
CheckReport check_branch(std::uint64_t seed, int steps = 100);

/// E_KL(t d) / (t^2/2 d^T F d) on a small completion instance with the exact
/// Fisher of the Gaussian observation model.
CheckReport check_kl_quadratic(std::uint64_t seed, int directions = 10);

struct BetaTailSpec {
  std::vector<Index> dims{2, 4, 16, 64};
  std::vector<double> gammas{1e-3, 1e-2, 1e-1};
  long trials = 1000000;
  int shards = 16;
};

/// P(|x^T v| <= gamma) <= sqrt(pi n) gamma with 4-sigma slack; arcsine law at n = 2.
CheckReport check_beta_tail(const BetaTailSpec& spec, std::uint64_t seed, int threads = 1);

struct JacobianStabilitySpec {
  Index n = 16;
  Index samples = 10;
  std::vector<Index> widths{256, 512, 1024, 2048};
  double q = 1.0;
  int probes = 20;
  double eps = 0.1;
  /// Draws used to estimate the constants M and L, and how many replicates.
  int constant_draws = 4000;
  int constant_replicates = 5;
};

/// ||J(theta) - J(theta0)||_F^2 at distance Q: median non-increasing in m and
/// every probe within the high-probability bound.
CheckReport check_jacobian_stability(const JacobianStabilitySpec& spec, std::uint64_t seed,
                                     int threads = 1);

struct RateSpec {
  Index m = 4096;
  Index n = 16;
  Index samples = 10;
  double t = 0.1;
  int max_steps = 400;
  double floor = 1e-10;
  int seeds = 5;
};

/// Per-step contraction factors of ||u^k - y|| stay below 1 - t/2 + 1e-3
/// (median over seeds of the worst factor).
CheckReport check_linear_rate(const RateSpec& spec, std::uint64_t seed, int threads = 1);
/// Log-log slope of r_{k+1} against r_k over pre-floor steps >= 1.8 (median).
CheckReport check_quadratic_rate(const RateSpec& spec, std::uint64_t seed, int threads = 1);

/// Noiseless fully observed completion (n=60, N=200, p=4): RNGD train MSE
/// below 1e-8 within 50 epochs.
CheckReport check_lrmc_convergence(std::uint64_t seed);

/// 30% observed, 20 dB: RNGD test MSE at epoch 30 against RSGD with its best
/// step from a log grid, median over `seeds` seeds.
CheckReport check_lrmc_vs_rsgd(std::uint64_t seed, int seeds = 5, int threads = 1);

}  // namespace rngd
