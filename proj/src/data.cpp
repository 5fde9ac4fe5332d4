#include "rngd/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rngd/run_log.hpp"

namespace rngd {

namespace {

std::string where(const std::filesystem::path& path, long line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<std::string_view> split_on(std::string_view s, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + sep.size();
  }
}

// Comma, tab or space separated fields; runs of whitespace count once.
std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> out;
  if (s.find(',') != std::string_view::npos) {
    for (auto f : split_on(s, ",")) out.push_back(trim(f));
    return out;
  }
  std::size_t pos = 0;
  while (pos < s.size()) {
    pos = s.find_first_not_of(" \t\r", pos);
    if (pos == std::string_view::npos) break;
    const auto end = s.find_first_of(" \t\r", pos);
    out.push_back(s.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    pos = end;
  }
  return out;
}

std::vector<long long> sorted_unique(std::vector<long long> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

Index index_of(const std::vector<long long>& sorted, long long id) {
  return static_cast<Index>(std::lower_bound(sorted.begin(), sorted.end(), id) - sorted.begin());
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_entries(std::uint64_t h, const RatingDataset& ds) {
  for (const Rating& r : ds.entries) {
    const long long row = r.row;
    const long long col = r.col;
    h = fnv1a(h, &row, sizeof row);
    h = fnv1a(h, &col, sizeof col);
    h = fnv1a(h, &r.value, sizeof r.value);
  }
  return h;
}

Matrix gaussian(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  }
  return g;
}

double noise_std_for(double signal_power, double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  if (!std::isfinite(snr_db)) throw ContractViolation("SNR must be finite or +inf");
  return std::sqrt(signal_power / std::pow(10.0, snr_db / 10.0));
}

void check_fraction(double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ContractViolation("split fraction must lie in (0, 1)");
}

}  // namespace

void RatingDataset::validate() const {
  if (n_rows < 0 || n_cols < 0) throw DataError("negative dataset shape");
  std::vector<std::pair<Index, Index>> keys;
  keys.reserve(entries.size());
  for (const Rating& r : entries) {
    if (r.row < 0 || r.row >= n_rows || r.col < 0 || r.col >= n_cols) {
      throw DataError("rating index (" + std::to_string(r.row) + ", " + std::to_string(r.col) +
                      ") out of range");
    }
    if (!std::isfinite(r.value)) throw DataError("non-finite rating value");
    keys.emplace_back(r.row, r.col);
  }
  std::sort(keys.begin(), keys.end());
  const auto dup = std::adjacent_find(keys.begin(), keys.end());
  if (dup != keys.end()) {
    throw DataError("duplicate rating for (" + std::to_string(dup->first) + ", " +
                    std::to_string(dup->second) + ")");
  }
}

MovieLensData load_movielens(const std::filesystem::path& path, IdMode mode) {
  std::ifstream in = open_input(path);
  struct Raw {
    long long user;
    long long movie;
    double value;
    long line;
  };
  std::vector<Raw> raw;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_on(line, "::");
    Raw r{0, 0, 0.0, lineno};
    if (f.size() != 4 || !parse_number(f[0], r.user) || !parse_number(f[1], r.movie) ||
        !parse_number(f[2], r.value)) {
      throw DataError(where(path, lineno) + "expected user::movie::rating::timestamp");
    }
    if (!std::isfinite(r.value)) throw DataError(where(path, lineno) + "non-finite rating");
    raw.push_back(r);
  }
  if (raw.empty()) throw DataError(path.string() + ": no ratings");

  MovieLensData out;
  std::vector<long long> users;
  std::vector<long long> movies;
  for (const Raw& r : raw) {
    users.push_back(r.user);
    movies.push_back(r.movie);
  }
  users = sorted_unique(std::move(users));
  movies = sorted_unique(std::move(movies));
  RatingDataset& ds = out.ratings;
  if (mode == IdMode::Raw) {
    if (users.front() < 1 || movies.front() < 1) throw DataError(path.string() + ": raw ids must be >= 1");
    ds.n_rows = static_cast<Index>(users.back());
    ds.n_cols = static_cast<Index>(movies.back());
    for (long long i = 1; i <= users.back(); ++i) out.ids.row_ids.push_back(i);
    for (long long i = 1; i <= movies.back(); ++i) out.ids.col_ids.push_back(i);
  } else {
    ds.n_rows = static_cast<Index>(users.size());
    ds.n_cols = static_cast<Index>(movies.size());
    out.ids.row_ids = users;
    out.ids.col_ids = movies;
  }
  std::map<std::pair<Index, Index>, long> seen;
  for (const Raw& r : raw) {
    const Index row = mode == IdMode::Raw ? static_cast<Index>(r.user - 1) : index_of(users, r.user);
    const Index col = mode == IdMode::Raw ? static_cast<Index>(r.movie - 1) : index_of(movies, r.movie);
    const auto [it, fresh] = seen.emplace(std::make_pair(row, col), r.line);
    if (!fresh) {
      throw DataError(where(path, r.line) + "duplicate rating for user " + std::to_string(r.user) +
                      " and movie " + std::to_string(r.movie) + " (first seen on line " +
                      std::to_string(it->second) + ")");
    }
    ds.entries.push_back({row, col, r.value});
  }
  ds.provenance = "movielens:" + path.filename().string();
  return out;
}

void write_id_mapping(const std::filesystem::path& path, const IdMapping& ids) {
  std::ostringstream os;
  os << "kind,index,id\n";
  for (std::size_t i = 0; i < ids.row_ids.size(); ++i) os << "row," << i << ',' << ids.row_ids[i] << '\n';
  for (std::size_t i = 0; i < ids.col_ids.size(); ++i) os << "col," << i << ',' << ids.col_ids[i] << '\n';
  write_file_atomic(path, os.str());
}

RatingDataset load_jester(const std::filesystem::path& path, bool leading_count) {
  std::ifstream in = open_input(path);
  RatingDataset ds;
  std::string line;
  long lineno = 0;
  Index width = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (leading_count) {
      if (fields.empty()) throw DataError(where(path, lineno) + "missing count column");
      fields.erase(fields.begin());
    }
    const Index w = static_cast<Index>(fields.size());
    if (width < 0) width = w;
    if (w != width) {
      throw DataError(where(path, lineno) + "expected " + std::to_string(width) + " fields, got " +
                      std::to_string(w));
    }
    const Index row = ds.n_rows++;
    for (Index c = 0; c < w; ++c) {
      double v = 0.0;
      if (!parse_number(fields[static_cast<std::size_t>(c)], v)) {
        throw DataError(where(path, lineno) + "field " + std::to_string(c + 1) + " is not a number");
      }
      if (v == 99.0) continue;
      if (!(v >= -10.0 && v <= 10.0)) {
        throw DataError(where(path, lineno) + "rating " + std::to_string(v) + " outside [-10, 10]");
      }
      ds.entries.push_back({row, c, v});
    }
  }
  if (ds.n_rows == 0) throw DataError(path.string() + ": no rows");
  ds.n_cols = width;
  ds.provenance = "jester:" + path.filename().string();
  return ds;
}

void write_ratings_csv(const std::filesystem::path& path, const RatingDataset& ds) {
  ds.validate();
  std::ostringstream os;
  os << "# " << ds.n_rows << ',' << ds.n_cols << '\n';
  for (const Rating& r : ds.entries) os << r.row << ',' << r.col << ',' << format_double(r.value) << '\n';
  write_file_atomic(path, os.str());
}

RatingDataset read_ratings_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  RatingDataset ds;
  std::string line;
  long lineno = 0;
  bool have_shape = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (!have_shape) {
      const auto f = t.front() == '#' ? split_on(t.substr(1), ",") : std::vector<std::string_view>{};
      if (f.size() != 2 || !parse_number(f[0], ds.n_rows) || !parse_number(f[1], ds.n_cols)) {
        throw DataError(where(path, lineno) + "expected '# n_rows,n_cols' header");
      }
      have_shape = true;
      continue;
    }
    const auto f = split_on(t, ",");
    Rating r{0, 0, 0.0};
    if (f.size() != 3 || !parse_number(f[0], r.row) || !parse_number(f[1], r.col) ||
        !parse_number(f[2], r.value)) {
      throw DataError(where(path, lineno) + "expected row,col,value");
    }
    ds.entries.push_back(r);
  }
  if (!have_shape) throw DataError(path.string() + ": empty file");
  ds.provenance = "csv:" + path.filename().string();
  ds.validate();
  return ds;
}

std::uint64_t SplitDataset::checksum() const {
  std::uint64_t h = 14695981039346656037ULL;
  h = hash_entries(h, train);
  const std::uint64_t sep = 0x5eed;
  h = fnv1a(h, &sep, sizeof sep);
  return hash_entries(h, test);
}

SplitDataset split(const RatingDataset& ds, double fraction, std::uint64_t seed) {
  check_fraction(fraction);
  Rng rng(seed);
  std::bernoulli_distribution coin(fraction);
  SplitDataset s{ds, ds, fraction, seed};
  s.train.entries.clear();
  s.test.entries.clear();
  for (const Rating& r : ds.entries) (coin(rng) ? s.train : s.test).entries.push_back(r);
  if (s.train.entries.empty() || s.test.entries.empty()) {
    throw DataError("degenerate split: one side is empty");
  }
  s.train.provenance = ds.provenance + "#train";
  s.test.provenance = ds.provenance + "#test";
  return s;
}

namespace {

std::vector<ObservedColumn> to_columns(const RatingDataset& ds, Index samples) {
  std::vector<std::vector<std::pair<Index, double>>> cols(static_cast<std::size_t>(samples));
  for (const Rating& r : ds.entries) cols[static_cast<std::size_t>(r.row)].emplace_back(r.col, r.value);
  std::vector<ObservedColumn> out(cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    std::sort(cols[i].begin(), cols[i].end());
    out[i].values.resize(static_cast<Index>(cols[i].size()));
    for (std::size_t k = 0; k < cols[i].size(); ++k) {
      out[i].rows.push_back(cols[i][k].first);
      out[i].values(static_cast<Index>(k)) = cols[i][k].second;
    }
  }
  return out;
}

}  // namespace

LrmcProblem make_lrmc_problem(const SplitDataset& s, Index p) {
  return LrmcProblem(s.train.n_cols, p, to_columns(s.train, s.train.n_rows), to_columns(s.test, s.train.n_rows));
}

LrmcProblem make_lrmc_problem(const RatingDataset& train, Index p) {
  return LrmcProblem(train.n_cols, p, to_columns(train, train.n_rows),
                     std::vector<ObservedColumn>(static_cast<std::size_t>(train.n_rows)));
}

SynthLrmc synth_lrmc(const SynthLrmcSpec& spec) {
  if (spec.p < 1 || spec.n < spec.p || spec.samples < 1) throw DimensionError("bad synthetic LRMC shape");
  if (!(spec.obs_fraction > 0.0 && spec.obs_fraction <= 1.0)) {
    throw ContractViolation("observation fraction must lie in (0, 1]");
  }
  Rng rng(spec.seed);
  GrassmannPoint truth = random_point(spec.n, spec.p, rng);
  const Matrix coeffs = gaussian(spec.p, spec.samples, rng);
  Matrix x = truth.mat() * coeffs;
  const double power = x.squaredNorm() / static_cast<double>(x.size());
  const double sd = noise_std_for(power, spec.snr_db);
  if (sd > 0.0) x += sd * gaussian(spec.n, spec.samples, rng);
  std::bernoulli_distribution observe(spec.obs_fraction);
  RatingDataset ds;
  ds.n_rows = spec.samples;
  ds.n_cols = spec.n;
  for (Index i = 0; i < spec.samples; ++i) {
    for (Index r = 0; r < spec.n; ++r) {
      if (spec.obs_fraction >= 1.0 || observe(rng)) ds.entries.push_back({i, r, x(r, i)});
    }
  }
  ds.provenance = "synthetic-lrmc";
  return {std::move(ds), std::move(truth), sd};
}

std::vector<Task> load_msl_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::map<long long, std::vector<std::vector<double>>> rows;
  std::string line;
  long lineno = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto f = split_on(t, ",");
    long long task = 0;
    if (!parse_number(f[0], task)) {
      if (first) {
        first = false;
        continue;  // header line
      }
      throw DataError(where(path, lineno) + "task id is not an integer");
    }
    first = false;
    if (f.size() < 3) throw DataError(where(path, lineno) + "expected task,y,x1,...");
    if (width == 0) width = f.size();
    if (f.size() != width) throw DataError(where(path, lineno) + "inconsistent number of fields");
    std::vector<double> vals(f.size() - 1);
    for (std::size_t k = 1; k < f.size(); ++k) {
      if (!parse_number(f[k], vals[k - 1]) || !std::isfinite(vals[k - 1])) {
        throw DataError(where(path, lineno) + "field " + std::to_string(k + 1) + " is not a finite number");
      }
    }
    rows[task].push_back(std::move(vals));
  }
  if (rows.empty()) throw DataError(path.string() + ": no samples");
  std::vector<Task> tasks;
  const Index n = static_cast<Index>(width) - 2;
  for (const auto& [id, rs] : rows) {
    Task t{Matrix(static_cast<Index>(rs.size()), n), Vector(static_cast<Index>(rs.size()))};
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const Index ii = static_cast<Index>(i);
      t.y(ii) = rs[i][0];
      for (Index c = 0; c < n; ++c) t.x(ii, c) = rs[i][static_cast<std::size_t>(c) + 1];
    }
    tasks.push_back(std::move(t));
  }
  return tasks;
}

SynthMsl synth_msl(const SynthMslSpec& spec) {
  if (spec.p < 1 || spec.n < spec.p || spec.tasks < 1 || spec.rows_per_task < 1) {
    throw DimensionError("bad synthetic subspace-learning shape");
  }
  Rng rng(spec.seed);
  GrassmannPoint truth = random_point(spec.n, spec.p, rng);
  std::vector<Task> tasks;
  for (Index i = 0; i < spec.tasks; ++i) {
    const Vector w = gaussian(spec.p, 1, rng);
    Task t{gaussian(spec.rows_per_task, spec.n, rng), Vector()};
    t.y = t.x * (truth.mat() * w);
    const double sd = noise_std_for(t.y.squaredNorm() / static_cast<double>(t.y.size()), spec.snr_db);
    if (sd > 0.0) t.y += sd * gaussian(spec.rows_per_task, 1, rng);
    tasks.push_back(std::move(t));
  }
  return {std::move(tasks), std::move(truth)};
}

TaskSplit split_tasks(const std::vector<Task>& tasks, double fraction, std::uint64_t seed) {
  check_fraction(fraction);
  Rng rng(seed);
  std::bernoulli_distribution coin(fraction);
  TaskSplit out;
  Index train_rows = 0;
  Index test_rows = 0;
  for (const Task& t : tasks) {
    std::vector<Index> tr;
    std::vector<Index> te;
    for (Index i = 0; i < t.x.rows(); ++i) (coin(rng) ? tr : te).push_back(i);
    auto take = [&](const std::vector<Index>& idx) {
      Task s{Matrix(static_cast<Index>(idx.size()), t.x.cols()), Vector(static_cast<Index>(idx.size()))};
      for (std::size_t k = 0; k < idx.size(); ++k) {
        s.x.row(static_cast<Index>(k)) = t.x.row(idx[k]);
        s.y(static_cast<Index>(k)) = t.y(idx[k]);
      }
      return s;
    };
    out.train.push_back(take(tr));
    out.test.push_back(take(te));
    train_rows += static_cast<Index>(tr.size());
    test_rows += static_cast<Index>(te.size());
  }
  if (train_rows == 0 || test_rows == 0) throw DataError("degenerate task split: one side is empty");
  return out;
}

SynthNet synth_nn(Index n, Index samples, std::uint64_t seed) {
  if (n < 2 || samples < 1) throw DimensionError("synthetic network data needs n >= 2 and N >= 1");
  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix x(samples, n);
    for (Index i = 0; i < samples; ++i) {
      for (Index c = 0; c < n; ++c) x(i, c) = normal(rng);
      x.row(i).normalize();
    }
    if (samples > 1) {
      const Eigen::RowVectorXd mean = x.colwise().mean();
      x.rowwise() -= mean;
      bool degenerate = false;
      for (Index i = 0; i < samples; ++i) {
        const double nrm = x.row(i).norm();
        if (!(nrm > 1e-8)) degenerate = true;
        else x.row(i) /= nrm;
      }
      if (degenerate) continue;
    }
    double closest = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < samples; ++i) {
      for (Index j = i + 1; j < samples; ++j) {
        closest = std::min({closest, (x.row(i) - x.row(j)).norm(), (x.row(i) + x.row(j)).norm()});
      }
    }
    if (!(closest > 1e-6)) continue;
    std::uniform_real_distribution<double> target(-1.0, 1.0);
    Vector y(samples);
    for (Index i = 0; i < samples; ++i) y(i) = target(rng);
    const double residual = x.colwise().mean().norm();
    return {{std::move(x), std::move(y)}, residual};
  }
  throw DataError("could not draw pairwise distinct inputs in 100 attempts");
}

}  // namespace rngd
