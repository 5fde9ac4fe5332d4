#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "rngd/data.hpp"
#include "rngd/run_log.hpp"

using namespace rngd;

namespace {

std::filesystem::path fixture(const std::string& name, const std::string& text) {
  const auto p = oracle::temp_path(name);
  oracle::write_text(p, text);
  return p;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

TEST(MovieLens, TwoLineFixture) {
  const auto p = fixture("ml_two.dat", "1::10::5::978300760\n2::10::3::978300761\n");
  const MovieLensData d = load_movielens(p);
  EXPECT_EQ(d.ratings.n_rows, 2);
  EXPECT_EQ(d.ratings.n_cols, 1);
  ASSERT_EQ(d.ratings.entries.size(), 2u);
  EXPECT_EQ(d.ratings.entries[0], (Rating{0, 0, 5.0}));
  EXPECT_EQ(d.ratings.entries[1], (Rating{1, 0, 3.0}));
  EXPECT_EQ(d.ids.col_ids, std::vector<long long>{10});
}

TEST(MovieLens, RawIdsKeepGaps) {
  const auto p = fixture("ml_raw.dat", "1::10::5::0\n3::2::4::0\n");
  const MovieLensData d = load_movielens(p, IdMode::Raw);
  EXPECT_EQ(d.ratings.n_rows, 3);
  EXPECT_EQ(d.ratings.n_cols, 10);
}

TEST(MovieLens, Errors) {
  EXPECT_NE(error_of([] { load_movielens(fixture("ml_dup.dat", "1::10::5::0\n1::10::4::1\n")); })
                .find("duplicate"),
            std::string::npos);
  EXPECT_NE(error_of([] { load_movielens(fixture("ml_bad.dat", "1::10::5::0\n1::x::4\n")); }).find(":2:"),
            std::string::npos);
  EXPECT_FALSE(error_of([] { load_movielens(fixture("ml_empty.dat", "")); }).empty());
  EXPECT_FALSE(error_of([] { load_movielens(oracle::temp_path("does_not_exist.dat")); }).empty());
}

TEST(Jester, SentinelsAreMissing) {
  const auto p = fixture("jester.csv", "2, 99, -3.5\n99,99,99\n");
  const RatingDataset d = load_jester(p);
  EXPECT_EQ(d.n_rows, 2);
  EXPECT_EQ(d.n_cols, 3);
  ASSERT_EQ(d.entries.size(), 2u);
  EXPECT_EQ(d.entries[0], (Rating{0, 0, 2.0}));
  EXPECT_EQ(d.entries[1], (Rating{0, 2, -3.5}));
}

TEST(Jester, LeadingCountAndErrors) {
  const RatingDataset d = load_jester(fixture("jester_count.csv", "2\t1.5\t99\n1\t99\t-2\n"), true);
  EXPECT_EQ(d.n_cols, 2);
  EXPECT_EQ(d.entries.size(), 2u);
  EXPECT_NE(error_of([] { load_jester(fixture("jester_range.csv", "1,11\n")); }).find("outside"), std::string::npos);
  EXPECT_NE(error_of([] { load_jester(fixture("jester_ragged.csv", "1,2\n1\n")); }).find(":2:"), std::string::npos);
}

TEST(RatingsCsv, RoundTrip) {
  Rng rng(1);
  const RatingDataset ds = synth_lrmc({8, 9, 2, 0.6, 20.0, 3}).ratings;
  const auto p = oracle::temp_path("roundtrip.csv");
  write_ratings_csv(p, ds);
  const RatingDataset back = read_ratings_csv(p);
  EXPECT_EQ(back.n_rows, ds.n_rows);
  EXPECT_EQ(back.n_cols, ds.n_cols);
  EXPECT_EQ(back.entries, ds.entries);
}

TEST(RatingsCsv, ValidationRejectsBadEntries) {
  RatingDataset ds{2, 2, {{0, 0, 1.0}, {0, 0, 2.0}}, ""};
  EXPECT_THROW(ds.validate(), DataError);
  ds.entries = {{0, 5, 1.0}};
  EXPECT_THROW(ds.validate(), DataError);
  ds.entries = {{0, 1, std::nan("")}};
  EXPECT_THROW(ds.validate(), DataError);
}

RatingDataset many_entries(Index rows, Index cols) {
  RatingDataset ds{rows, cols, {}, "grid"};
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) ds.entries.push_back({i, j, static_cast<double>(i - j)});
  return ds;
}

TEST(Split, SizeWithinBinomialBound) {
  const RatingDataset ds = many_entries(100, 100);
  const SplitDataset s = split(ds, 0.5, 7);
  const double sd = std::sqrt(10000 * 0.25);
  EXPECT_LE(std::abs(static_cast<double>(s.train.entries.size()) - 5000.0), 3 * sd);
}

TEST(Split, DisjointUnionAndReproducible) {
  const RatingDataset ds = many_entries(20, 15);
  const SplitDataset a = split(ds, 0.3, 11);
  const SplitDataset b = split(ds, 0.3, 11);
  EXPECT_EQ(a.train.entries, b.train.entries);
  EXPECT_EQ(a.checksum(), b.checksum());
  EXPECT_NE(a.checksum(), split(ds, 0.3, 12).checksum());
  std::set<std::pair<Index, Index>> seen;
  for (const auto* side : {&a.train, &a.test})
    for (const Rating& r : side->entries) EXPECT_TRUE(seen.insert({r.row, r.col}).second);
  EXPECT_EQ(seen.size(), ds.entries.size());
}

TEST(Split, TwoEntriesOneEach) {
  const RatingDataset ds = many_entries(1, 2);
  int found = 0;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    try {
      const SplitDataset s = split(ds, 0.5, seed);
      EXPECT_EQ(s.train.entries.size(), 1u);
      EXPECT_EQ(s.test.entries.size(), 1u);
      ++found;
    } catch (const DataError&) {
    }
  }
  EXPECT_GT(found, 0);
  EXPECT_LT(found, 64);
}

TEST(Split, BadFraction) {
  const RatingDataset ds = many_entries(3, 3);
  EXPECT_THROW(split(ds, 1.0, 0), ContractViolation);
  EXPECT_THROW(split(ds, 0.0, 0), ContractViolation);
}

TEST(SynthLrmc, NoiselessTruthHasZeroLoss) {
  const SynthLrmc s = synth_lrmc({12, 20, 3, 1.0, std::numeric_limits<double>::infinity(), 5});
  EXPECT_EQ(s.noise_std, 0.0);
  const LrmcProblem prob = make_lrmc_problem(s.ratings, 3);
  EXPECT_LT(prob.loss(s.truth, prob.all_indices()), 1e-26);
  EXPECT_EQ(static_cast<Index>(s.ratings.entries.size()), 12 * 20);
}

TEST(SynthLrmc, ObservedCountWithinBinomialBound) {
  const SynthLrmc s = synth_lrmc({60, 200, 4, 0.3, 20.0, 9});
  const double mean = 0.3 * 60 * 200;
  const double sd = std::sqrt(60 * 200 * 0.3 * 0.7);
  EXPECT_LE(std::abs(static_cast<double>(s.ratings.entries.size()) - mean), 3 * sd);
  // The noise level realizes the requested SNR: 10^(20/10) = signal / noise power.
  EXPECT_GT(s.noise_std, 0.0);
}

TEST(SynthMsl, ShapesAndSplit) {
  SynthMslSpec spec;
  spec.n = 10;
  spec.tasks = 4;
  spec.rows_per_task = 12;
  const SynthMsl s = synth_msl(spec);
  ASSERT_EQ(s.tasks.size(), 4u);
  EXPECT_EQ(s.tasks[0].x.cols(), 10);
  const TaskSplit ts = split_tasks(s.tasks, 0.5, 3);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(ts.train[i].x.rows() + ts.test[i].x.rows(), 12);
  }
}

TEST(MslCsv, Load) {
  const auto p = fixture("msl.csv", "1,0.5,1,2\n1,1.5,3,4\n2,2.0,5,6\n");
  const auto tasks = load_msl_csv(p);
  ASSERT_EQ(tasks.size(), 2u);
  EXPECT_EQ(tasks[0].x.rows(), 2);
  EXPECT_EQ(tasks[0].x(1, 0), 3.0);
  EXPECT_EQ(tasks[1].y(0), 2.0);
  EXPECT_THROW(load_msl_csv(fixture("msl_bad.csv", "1,0.5,1,2\n1,1.5,3\n")), DataError);
}

TEST(SynthNn, InputsAreUnitAndDistinct) {
  const SynthNet s = synth_nn(16, 10, 4);
  double closest = 1e9;
  for (Index i = 0; i < 10; ++i) {
    EXPECT_LE(std::abs(s.data.x.row(i).norm() - 1.0), 1e-12);
    EXPECT_GE(s.data.y(i), -1.0);
    EXPECT_LE(s.data.y(i), 1.0);
    for (Index j = i + 1; j < 10; ++j) {
      closest = std::min({closest, (s.data.x.row(i) - s.data.x.row(j)).norm(), (s.data.x.row(i) + s.data.x.row(j)).norm()});
    }
  }
  EXPECT_GT(closest, 1e-6);
  EXPECT_NEAR(s.residual_mean_norm, s.data.x.colwise().mean().norm(), 1e-15);
}

// --- run logs ---

TEST(RunLog, RoundTripAndAtomicCommit) {
  const auto p = oracle::temp_path("log_roundtrip.csv");
  std::filesystem::remove(p);
  {
    RunLogWriter w(p, {{"algo", "rngd"}});
    w.append({1, 0.5, 1.25, 2.5, 1.0, 0.0});
    w.append({2, 1.0, 0.1, std::nan(""), 0.5, 0.0});
    EXPECT_FALSE(std::filesystem::exists(p));
    w.commit();
  }
  const RunLog log = read_run_log(p);
  EXPECT_EQ(log.meta["algo"], "rngd");
  ASSERT_EQ(log.records.size(), 2u);
  EXPECT_EQ(log.records[0].train, 1.25);
  EXPECT_TRUE(std::isnan(log.records[1].test));
}

TEST(RunLog, TruncatedTailIsIgnored) {
  const auto p = oracle::temp_path("log_trunc.csv");
  {
    RunLogWriter w(p, {{"k", 1}});
    w.append({1, 0.5, 1.0, 2.0, 1.0, 0.0});
    w.append({2, 1.0, 0.5, 1.0, 1.0, 0.0});
    w.commit();
  }
  std::string text = oracle::read_text(p);
  text.resize(text.size() - 4);
  oracle::write_text(p, text);
  EXPECT_EQ(read_run_log(p).records.size(), 1u);
}

TEST(RunLog, UncommittedStaysTemporary) {
  const auto p = oracle::temp_path("log_partial.csv");
  std::filesystem::remove(p);
  {
    RunLogWriter w(p, {});
    w.append({1, 0.5, 1.0, 2.0, 1.0, 0.0});
  }
  EXPECT_FALSE(std::filesystem::exists(p));
  EXPECT_EQ(read_run_log(std::filesystem::path(p.string() + ".tmp")).records.size(), 1u);
}

TEST(RunLog, RejectsBadRecords) {
  RunLogWriter w(oracle::temp_path("log_bad.csv"), {});
  w.append({3, 0.5, 1.0, 2.0, 1.0, 0.0});
  EXPECT_THROW(w.append({3, 0.5, 1.0, 2.0, 1.0, 0.0}), ContractViolation);
  EXPECT_THROW(w.append({4, 0.5, std::nan(""), 2.0, 1.0, 0.0}), NumericalError);
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
}

}  // namespace
