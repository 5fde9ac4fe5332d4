#pragma once

// Curvature operators on the tangent space of a Grassmann point: dense
// empirical Fisher (small problems, oracle use), Kronecker-factored Fisher
// and the damped inverse (F + lambda I)^{-1}.

#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "rngd/manifold.hpp"

namespace rngd {

/// Column-major vec(H) for an n x p matrix H.
Vector vec(const Matrix& h);
Matrix unvec(const Vector& v, Index rows, Index cols);

/// r x r symmetric PSD matrix acting on vec coordinates, r = n p.
class DenseFisher {
 public:
  DenseFisher(Matrix mat, Index rows, Index cols);

  const Matrix& mat() const noexcept { return mat_; }
  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }

 private:
  Matrix mat_;
  Index rows_;
  Index cols_;
};

/// a_factor (x) g_factor sandwiched by the tangent projector. Applied to a
/// tangent H it returns P(g_factor H a_factor^T). When the left factor is the
/// tangent projector itself (I - X X^T) it is kept implicit so that n x n
/// matrices are never formed.
class KroneckerFisher {
 public:
  KroneckerFisher(Matrix a_factor, Matrix g_factor);
  static KroneckerFisher with_projector_left(Matrix a_factor);

  const Matrix& a_factor() const noexcept { return a_; }
  /// Empty when left_is_projector().
  const Matrix& g_factor() const noexcept { return g_; }
  bool left_is_projector() const noexcept { return projector_left_; }

 private:
  KroneckerFisher(Matrix a, Matrix g, bool projector_left);

  Matrix a_;
  Matrix g_;
  bool projector_left_ = false;
};

using FisherOperator = std::variant<DenseFisher, KroneckerFisher>;

/// (1/|S|) sum_s vec(g_s) vec(g_s)^T.
DenseFisher exact_refim(std::span<const TangentVector> samples);

/// a_factor = (1/|S|) sum A_s A_s^T, g_factor = (1/|S|) sum G_s G_s^T for
/// per-sample gradients G_s A_s^T.
KroneckerFisher kron_refim(std::span<const Matrix> a_samples, std::span<const Matrix> g_samples);

TangentVector apply(const FisherOperator& f, const TangentVector& d);
TangentVector apply(const DenseFisher& f, const TangentVector& d);
TangentVector apply(const KroneckerFisher& f, const TangentVector& d);

/// Dense matrix of P (a_factor (x) g_factor) P in vec coordinates at `base`.
Matrix assemble_dense(const KroneckerFisher& f, const GrassmannPoint& base);

enum class SolveMethod { Factored, CG };

std::string_view to_string(SolveMethod m);
SolveMethod parse_solve_method(std::string_view name);

struct SolveOptions {
  SolveMethod method = SolveMethod::Factored;
  double cg_tol = 1e-8;
  int cg_maxit = 250;
};

struct SolveResult {
  TangentVector d;
  double lambda = 0.0;
  /// ||(F + lambda I) d + g|| / ||g||.
  double rel_residual = 0.0;
  int iterations = 0;
  /// False only when CG stopped at cg_maxit; d is then the best iterate.
  bool converged = true;
};

/// d = -(F + lambda I)^{-1} g restricted to the tangent space.
SolveResult solve_damped(const FisherOperator& f, double lambda, const TangentVector& g,
                         const SolveOptions& opts = {});

}  // namespace rngd
