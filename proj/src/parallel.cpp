#include "rngd/parallel.hpp"

#include <cstdlib>
#include <string>

namespace rngd {

int default_threads() {
  const char* env = std::getenv("RNGD_THREADS");
  if (env == nullptr) return 1;
  try {
    const int v = std::stoi(env);
    return v > 0 ? v : 1;
  } catch (const std::exception&) {
    return 1;
  }
}

std::uint64_t shard_seed(std::uint64_t seed, std::uint64_t shard) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (shard + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace rngd
