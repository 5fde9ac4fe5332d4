#pragma once

// Rating matrices (MovieLens, Jester, canonical CSV), train/test splits and
// synthetic instances for the three model problems.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "rngd/bn_net.hpp"
#include "rngd/lrmc.hpp"
#include "rngd/subspace.hpp"

namespace rngd {

struct Rating {
  Index row;
  Index col;
  double value;

  bool operator==(const Rating&) const = default;
};

/// Rows are users (samples), columns are items (features).
struct RatingDataset {
  Index n_rows = 0;
  Index n_cols = 0;
  std::vector<Rating> entries;
  std::string provenance;

  /// Indices in range, no duplicate (row, col), finite values.
  void validate() const;
};

/// Original ids of the dense indices.
struct IdMapping {
  std::vector<long long> row_ids;
  std::vector<long long> col_ids;
};

struct MovieLensData {
  RatingDataset ratings;
  IdMapping ids;
};

enum class IdMode {
  /// Contiguous 0-based indices in increasing id order.
  Dense,
  /// index = id - 1, matrix sized by the largest id.
  Raw,
};

/// `user::movie::rating::timestamp` lines.
MovieLensData load_movielens(const std::filesystem::path& path, IdMode mode = IdMode::Dense);
void write_id_mapping(const std::filesystem::path& path, const IdMapping& ids);

/// Comma, tab or whitespace separated dense matrix; 99 marks a missing rating.
/// With `leading_count` the first field of each row (the per-user rating count
/// in the original distribution) is skipped.
RatingDataset load_jester(const std::filesystem::path& path, bool leading_count = false);

/// `# n_rows,n_cols` comment line, then `row,col,value` lines.
void write_ratings_csv(const std::filesystem::path& path, const RatingDataset& ds);
RatingDataset read_ratings_csv(const std::filesystem::path& path);

struct SplitDataset {
  RatingDataset train;
  RatingDataset test;
  double fraction;
  std::uint64_t seed;

  /// FNV-1a over both sides; equal checksums mean identical splits.
  std::uint64_t checksum() const;
};

/// Each entry goes to train with probability `fraction`.
SplitDataset split(const RatingDataset& ds, double fraction, std::uint64_t seed);

/// Columns of the LRMC data matrix are the dataset rows (one per user).
LrmcProblem make_lrmc_problem(const SplitDataset& s, Index p);
/// Every entry is a training entry; test columns are empty.
LrmcProblem make_lrmc_problem(const RatingDataset& train, Index p);

struct SynthLrmcSpec {
  Index n = 60;
  Index samples = 200;
  Index p = 4;
  double obs_fraction = 1.0;
  /// Signal-to-noise ratio in dB; +inf gives noiseless data.
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
};

struct SynthLrmc {
  /// samples x n ratings: entry (i, r) is X(r, i) for X = U* A* + noise.
  RatingDataset ratings;
  GrassmannPoint truth;
  double noise_std;
};

SynthLrmc synth_lrmc(const SynthLrmcSpec& spec);

/// `task,y,x1,...,xn` lines, tasks numbered from 0 or 1 (any integers).
std::vector<Task> load_msl_csv(const std::filesystem::path& path);

struct SynthMslSpec {
  Index n = 20;
  Index tasks = 30;
  Index rows_per_task = 20;
  Index p = 3;
  double snr_db = 20.0;
  std::uint64_t seed = 0;
};

struct SynthMsl {
  std::vector<Task> tasks;
  GrassmannPoint truth;
};

SynthMsl synth_msl(const SynthMslSpec& spec);

struct TaskSplit {
  std::vector<Task> train;
  std::vector<Task> test;
};

/// Per-row Bernoulli(fraction) assignment inside every task.
TaskSplit split_tasks(const std::vector<Task>& tasks, double fraction, std::uint64_t seed);

struct SynthNet {
  NetData data;
  /// Norm of the input mean left after centering and re-normalization.
  double residual_mean_norm;
};

/// Unit-norm inputs (uniform on the sphere, centered, re-normalized),
/// pairwise x_i != +-x_j, targets uniform on [-1, 1].
SynthNet synth_nn(Index n, Index samples, std::uint64_t seed);

}  // namespace rngd
