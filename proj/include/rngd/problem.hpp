#pragma once

// Finite-sum objective on a Grassmann manifold, as seen by the stochastic
// optimizers: Psi(U) = (1/|S|) sum_i psi_i(U) over sample indices.

#include <span>
#include <string>
#include <vector>

#include "rngd/fisher.hpp"
#include "rngd/manifold.hpp"

namespace rngd {

using Batch = std::span<const Index>;

struct LossGrad {
  double value;
  TangentVector grad;
};

struct Metrics {
  double train;
  double test;
};

class ModelProblem {
 public:
  virtual ~ModelProblem() = default;

  virtual std::string name() const = 0;
  virtual Index num_samples() const = 0;
  virtual Index n() const = 0;
  virtual Index p() const = 0;

  /// Mean loss over the batch.
  virtual double loss(const GrassmannPoint& u, Batch batch) const = 0;
  /// Mean loss and its Riemannian gradient over the batch.
  virtual LossGrad loss_grad(const GrassmannPoint& u, Batch batch) const = 0;
  /// Kronecker-factored empirical Fisher over the batch.
  virtual KroneckerFisher fisher(const GrassmannPoint& u, Batch batch) const = 0;
  /// Reported per-epoch quality (MSE for completion, NMSE for subspace learning).
  virtual Metrics metrics(const GrassmannPoint& u) const = 0;

  std::vector<Index> all_indices() const;
};

}  // namespace rngd
