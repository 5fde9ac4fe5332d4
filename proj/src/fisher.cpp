#include "rngd/fisher.hpp"

#include <cmath>
#include <string>

namespace rngd {

namespace {

void check_symmetric_psd(const Matrix& m, const char* what, double psd_tol) {
  if (m.rows() != m.cols()) throw DimensionError(std::string(what) + " must be square");
  if (!m.allFinite()) throw NumericalError(std::string(what) + " has non-finite entries");
  const double scale = std::max(1.0, m.norm());
  if ((m - m.transpose()).norm() > 1e-10 * scale) {
    throw ContractViolation(std::string(what) + " is not symmetric");
  }
  if (m.rows() == 0) return;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError(std::string(what) + ": eigensolver failed");
  if (eig.eigenvalues().minCoeff() < -psd_tol * scale) {
    throw ContractViolation(std::string(what) + " is not positive semidefinite");
  }
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// (F + lambda I) d on the tangent space.
TangentVector damped_apply(const FisherOperator& f, double lambda, const TangentVector& d) {
  TangentVector out = apply(f, d);
  out += lambda * d;
  return out;
}

double relative_residual(const FisherOperator& f, double lambda, const TangentVector& d,
                         const TangentVector& g) {
  const double gn = norm(g);
  if (gn == 0.0) return 0.0;
  return norm(damped_apply(f, lambda, d) + g) / gn;
}

SolveResult solve_factored(const DenseFisher& f, double lambda, const TangentVector& g) {
  const GrassmannPoint& base = g.base();
  const Index r = f.mat().rows();
  // Restrict to the tangent space: (P M P + lambda I) leaves range(P) invariant.
  Matrix proj = Matrix::Identity(r, r);
  const Matrix xxT = base.projector();
  for (Index j = 0; j < base.p(); ++j) {
    proj.block(j * base.n(), j * base.n(), base.n(), base.n()) -= xxT;
  }
  Matrix system = proj * f.mat() * proj;
  system.diagonal().array() += lambda;
  Eigen::LDLT<Matrix> ldlt(system);
  if (ldlt.info() != Eigen::Success) throw NumericalError("dense damped solve failed");
  const Vector x = ldlt.solve(-vec(g.mat()));
  if (!x.allFinite()) throw NumericalError("dense damped solve produced non-finite values");
  return {project(base, unvec(x, base.n(), base.p())), lambda, 0.0, 0, true};
}

SolveResult solve_factored(const KroneckerFisher& f, double lambda, const TangentVector& g) {
  const GrassmannPoint& base = g.base();
  const Index p = base.p();
  Eigen::SelfAdjointEigenSolver<Matrix> eig_a(f.a_factor());
  if (eig_a.info() != Eigen::Success) throw NumericalError("eigendecomposition of a_factor failed");
  const Matrix& va = eig_a.eigenvectors();
  const Vector& la = eig_a.eigenvalues();

  Matrix d;
  if (f.left_is_projector()) {
    // On tangent H the operator is H -> H A.
    const Matrix c = g.mat() * va;
    Matrix scaled(c.rows(), p);
    for (Index j = 0; j < p; ++j) scaled.col(j) = c.col(j) / (la(j) + lambda);
    d = -scaled * va.transpose();
  } else {
    // Restricted operator A (x) (P G P); P G P commutes with P.
    const Matrix xxT = base.projector();
    Matrix pg = f.g_factor() - xxT * f.g_factor();
    pg = pg - pg * xxT;
    Eigen::SelfAdjointEigenSolver<Matrix> eig_g(symmetrized(pg));
    if (eig_g.info() != Eigen::Success) throw NumericalError("eigendecomposition of g_factor failed");
    const Matrix& vg = eig_g.eigenvectors();
    const Vector& lg = eig_g.eigenvalues();
    Matrix c = vg.transpose() * g.mat() * va;
    for (Index j = 0; j < c.cols(); ++j) {
      for (Index i = 0; i < c.rows(); ++i) c(i, j) /= lg(i) * la(j) + lambda;
    }
    d = -vg * c * va.transpose();
  }
  if (!d.allFinite()) throw NumericalError("factored damped solve produced non-finite values");
  return {project(base, d), lambda, 0.0, 0, true};
}

SolveResult solve_cg(const FisherOperator& f, double lambda, const TangentVector& g,
                     const SolveOptions& opts) {
  const double gn = norm(g);
  TangentVector x = TangentVector::zero(g.base());
  TangentVector r = -g;
  TangentVector dir = r;
  double rs = inner(r, r);
  TangentVector best = x;
  double best_res = std::sqrt(rs);
  int it = 0;
  bool converged = std::sqrt(rs) <= opts.cg_tol * gn;
  while (!converged && it < opts.cg_maxit) {
    ++it;
    const TangentVector ad = damped_apply(f, lambda, dir);
    const double curv = inner(dir, ad);
    if (!(curv > 0.0)) break;
    const double alpha = rs / curv;
    x += alpha * dir;
    r -= alpha * ad;
    const double rs_new = inner(r, r);
    const double res = std::sqrt(rs_new);
    if (res < best_res) {
      best_res = res;
      best = x;
    }
    if (res <= opts.cg_tol * gn) {
      // The recurred residual drifts; confirm with the true one and restart
      // from it if needed.
      const TangentVector true_r = -(g + damped_apply(f, lambda, x));
      const double true_res = norm(true_r);
      if (true_res <= opts.cg_tol * gn) {
        converged = true;
        break;
      }
      r = true_r;
      dir = r;
      rs = true_res * true_res;
      continue;
    }
    dir = r + (rs_new / rs) * dir;
    rs = rs_new;
  }
  if (!best.mat().allFinite()) throw NumericalError("CG produced non-finite values");
  return {converged ? x : best, lambda, 0.0, it, converged};
}

}  // namespace

Vector vec(const Matrix& h) { return Eigen::Map<const Vector>(h.data(), h.size()); }

Matrix unvec(const Vector& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw DimensionError("unvec: size mismatch");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

DenseFisher::DenseFisher(Matrix mat, Index rows, Index cols)
    : mat_(std::move(mat)), rows_(rows), cols_(cols) {
  if (mat_.rows() != rows * cols) throw DimensionError("dense Fisher size must equal n p");
  check_symmetric_psd(mat_, "dense Fisher", 1e-8);
}

KroneckerFisher::KroneckerFisher(Matrix a_factor, Matrix g_factor)
    : KroneckerFisher(std::move(a_factor), std::move(g_factor), false) {}

KroneckerFisher KroneckerFisher::with_projector_left(Matrix a_factor) {
  return KroneckerFisher(std::move(a_factor), Matrix(), true);
}

KroneckerFisher::KroneckerFisher(Matrix a, Matrix g, bool projector_left)
    : a_(std::move(a)), g_(std::move(g)), projector_left_(projector_left) {
  check_symmetric_psd(a_, "a_factor", 1e-10);
  if (!projector_left_) check_symmetric_psd(g_, "g_factor", 1e-10);
}

DenseFisher exact_refim(std::span<const TangentVector> samples) {
  if (samples.empty()) throw ContractViolation("exact_refim needs at least one sample");
  const GrassmannPoint& base = samples.front().base();
  const Index r = base.n() * base.p();
  Matrix acc = Matrix::Zero(r, r);
  for (const TangentVector& s : samples) {
    if (!s.base().same_base(base)) throw ContractViolation("exact_refim: samples at different points");
    const Vector v = vec(s.mat());
    acc.noalias() += v * v.transpose();
  }
  acc /= static_cast<double>(samples.size());
  return DenseFisher(symmetrized(acc), base.n(), base.p());
}

KroneckerFisher kron_refim(std::span<const Matrix> a_samples, std::span<const Matrix> g_samples) {
  if (a_samples.empty()) throw ContractViolation("kron_refim needs at least one sample");
  if (a_samples.size() != g_samples.size()) {
    throw DimensionError("kron_refim: a and g sample counts differ");
  }
  const Index qa = a_samples.front().rows();
  const Index qg = g_samples.front().rows();
  Matrix a = Matrix::Zero(qa, qa);
  Matrix g = Matrix::Zero(qg, qg);
  for (std::size_t s = 0; s < a_samples.size(); ++s) {
    const Matrix& as = a_samples[s];
    const Matrix& gs = g_samples[s];
    if (as.rows() != qa || gs.rows() != qg || as.cols() != gs.cols()) {
      throw DimensionError("kron_refim: inconsistent sample shapes");
    }
    a.noalias() += as * as.transpose();
    g.noalias() += gs * gs.transpose();
  }
  const double inv = 1.0 / static_cast<double>(a_samples.size());
  return KroneckerFisher(symmetrized(a * inv), symmetrized(g * inv));
}

TangentVector apply(const DenseFisher& f, const TangentVector& d) {
  const GrassmannPoint& base = d.base();
  if (f.rows() != base.n() || f.cols() != base.p()) throw DimensionError("apply: Fisher shape mismatch");
  const Vector out = f.mat() * vec(d.mat());
  return project(base, unvec(out, base.n(), base.p()));
}

TangentVector apply(const KroneckerFisher& f, const TangentVector& d) {
  const GrassmannPoint& base = d.base();
  if (f.a_factor().rows() != base.p()) throw DimensionError("apply: a_factor size must equal p");
  if (f.left_is_projector()) return project(base, d.mat() * f.a_factor().transpose());
  if (f.g_factor().rows() != base.n()) throw DimensionError("apply: g_factor size must equal n");
  return project(base, f.g_factor() * d.mat() * f.a_factor().transpose());
}

TangentVector apply(const FisherOperator& f, const TangentVector& d) {
  return std::visit([&](const auto& op) { return apply(op, d); }, f);
}

Matrix assemble_dense(const KroneckerFisher& f, const GrassmannPoint& base) {
  const Index n = base.n();
  const Index p = base.p();
  const Matrix left = f.left_is_projector() ? Matrix(Matrix::Identity(n, n) - base.projector())
                                            : f.g_factor();
  const Matrix& a = f.a_factor();
  Matrix k(n * p, n * p);
  for (Index j = 0; j < p; ++j) {
    for (Index l = 0; l < p; ++l) k.block(j * n, l * n, n, n) = a(j, l) * left;
  }
  Matrix proj = Matrix::Identity(n * p, n * p);
  const Matrix xxT = base.projector();
  for (Index j = 0; j < p; ++j) proj.block(j * n, j * n, n, n) -= xxT;
  return proj * k * proj;
}

std::string_view to_string(SolveMethod m) { return m == SolveMethod::CG ? "cg" : "factored"; }

SolveMethod parse_solve_method(std::string_view name) {
  if (name == "factored") return SolveMethod::Factored;
  if (name == "cg") return SolveMethod::CG;
  throw DataError("unknown solve method '" + std::string(name) + "'");
}

SolveResult solve_damped(const FisherOperator& f, double lambda, const TangentVector& g,
                         const SolveOptions& opts) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ContractViolation("solve_damped needs a finite lambda > 0");
  }
  SolveResult res = [&]() -> SolveResult {
    if (opts.method == SolveMethod::CG) return solve_cg(f, lambda, g, opts);
    return std::visit([&](const auto& op) { return solve_factored(op, lambda, g); }, f);
  }();
  res.rel_residual = relative_residual(f, lambda, res.d, g);
  return res;
}

}  // namespace rngd
