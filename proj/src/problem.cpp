#include "rngd/problem.hpp"

#include <numeric>

namespace rngd {

std::vector<Index> ModelProblem::all_indices() const {
  std::vector<Index> idx(static_cast<std::size_t>(num_samples()));
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

}  // namespace rngd
