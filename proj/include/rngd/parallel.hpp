#pragma once

// Fixed sharding for Monte-Carlo work: shard s always gets the same seed and
// results are combined in shard order, so output does not depend on the
// number of worker threads.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rngd {

/// Default worker count: RNGD_THREADS if set and positive, else 1.
int default_threads();

/// Calls fn(shard) for shard in [0, shards) on up to `threads` workers and
/// returns the results indexed by shard. The first exception is rethrown.
template <class Fn>
auto run_shards(int shards, int threads, Fn fn) -> std::vector<decltype(fn(0))> {
  using R = decltype(fn(0));
  std::vector<R> out(static_cast<std::size_t>(std::max(shards, 0)));
  const int workers = std::clamp(threads, 1, std::max(shards, 1));
  if (workers == 1) {
    for (int s = 0; s < shards; ++s) out[static_cast<std::size_t>(s)] = fn(s);
    return out;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int s = next++; s < shards; s = next++) {
        try {
          out[static_cast<std::size_t>(s)] = fn(s);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

/// Seed for shard `shard` of a run seeded with `seed` (SplitMix64 mix).
std::uint64_t shard_seed(std::uint64_t seed, std::uint64_t shard);

}  // namespace rngd
