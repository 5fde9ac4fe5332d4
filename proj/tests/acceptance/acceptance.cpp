// Acceptance run: one PASS/FAIL line per criterion, with its runtime budget.
// Usage: rngd_acceptance [--seed S] [--threads T] [--only N]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "rngd/experiment.hpp"
#include "rngd/parallel.hpp"
#include "rngd/run_log.hpp"
#include "rngd/verify.hpp"

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* what;
  double budget_s;  // 0: no runtime budget
  std::function<Outcome()> run;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Collects the named measurements of a set of reports into one outcome.
Outcome from_reports(const std::vector<rngd::CheckReport>& reports, const std::vector<std::string>& show) {
  Outcome o;
  for (const auto& r : reports) {
    o.ok = o.ok && r.passed();
    for (const auto& m : r.values) {
      bool wanted = !m.ok();
      for (const auto& s : show) wanted = wanted || m.name.rfind(s, 0) == 0;
      if (!wanted) continue;
      if (!o.detail.empty()) o.detail += ", ";
      o.detail += m.name + "=" + fmt(m.value);
      if (!m.ok()) o.detail += "(!)";
    }
  }
  return o;
}

Outcome determinism(std::uint64_t seed, int threads) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "rngd_acceptance";
  fs::create_directories(dir);
  Outcome o;
  int compared = 0;

  auto same_file = [](const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
    return !sa.empty() && sa == sb;
  };

  for (const char* algo : {"rngd", "rsgd", "rsvrg", "rcg"}) {
    rngd::ExperimentConfig cfg;
    cfg.algo = algo;
    cfg.synthetic = "n=30,N=80,p=3,obs=0.5,snr=20";
    cfg.epochs = 5;
    cfg.seed = seed;
    cfg.rngd.grad_batch = 10;
    cfg.first_order.batch = 10;
    // Same command twice: the output path is part of the recorded config.
    const fs::path a = dir / (std::string(algo) + ".csv"), b = dir / (std::string(algo) + "_first.csv");
    cfg.output = a.string();
    rngd::run_experiment(cfg);
    fs::copy_file(a, b, fs::copy_options::overwrite_existing);
    rngd::run_experiment(cfg);
    ++compared;
    if (!same_file(a, b)) {
      o.ok = false;
      o.detail += std::string("run ") + algo + " differs; ";
    }
  }
  for (const char* suite : {"geometry", "kl", "beta"}) {
    const std::string x = rngd::reports_csv(rngd::run_verify(suite, seed, threads));
    const std::string y = rngd::reports_csv(rngd::run_verify(suite, seed, threads));
    ++compared;
    if (x != y) {
      o.ok = false;
      o.detail += std::string("verify ") + suite + " differs; ";
    }
  }
  o.detail += std::to_string(compared) + " repeated outputs compared byte for byte";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::uint64_t seed = 0;
  int threads = rngd::default_threads();
  int only = 0;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (!std::strcmp(argv[i], "--seed")) seed = std::strtoull(argv[i + 1], nullptr, 10);
    else if (!std::strcmp(argv[i], "--threads")) threads = std::atoi(argv[i + 1]);
    else if (!std::strcmp(argv[i], "--only")) only = std::atoi(argv[i + 1]);
  }

  const std::vector<Criterion> criteria = {
      {1, "retraction orders", 5.0,
       [&] { return from_reports({rngd::check_geometry(seed)}, {"first_order_slope_qr", "second_order_slope_polar", "second_order_slope_exp"}); }},
      {2, "gradients vs finite differences", 30.0,
       [&] { return from_reports({rngd::check_gradients(seed)}, {"lrmc_max_rel_err", "msl_exact_max_rel_err", "bn_max_rel_err"}); }},
      {3, "Fisher exactness and damped solves", 5.0,
       [&] {
         return from_reports({rngd::check_fisher_consistency(seed), rngd::check_damped_solve(seed)},
                             {"single_sample_spectral_rel", "factored_rel_residual", "cg_rel_residual"});
       }},
      {4, "acceptance and damping branches", 0.0,
       [&] { return from_reports({rngd::check_branch(seed)}, {"mismatched_steps"}); }},
      {5, "synthetic completion convergence and RSGD comparison", 180.0,
       [&] {
         return from_reports({rngd::check_lrmc_convergence(seed), rngd::check_lrmc_vs_rsgd(seed, 5, threads)},
                             {"final_train_mse", "rngd_median_test_mse", "rsgd_best_median_test_mse"});
       }},
      {6, "deterministic linear and quadratic rates", 120.0,
       [&] {
         rngd::RateSpec lin;
         rngd::RateSpec quad;
         quad.t = 1.0;
         return from_reports({rngd::check_linear_rate(lin, seed, threads), rngd::check_quadratic_rate(quad, seed, threads)},
                             {"median_worst_factor", "median_order"});
       }},
      {7, "small-ball probability bound", 30.0,
       [&] { return from_reports({rngd::check_beta_tail(rngd::BetaTailSpec{}, seed, threads)}, {"arcsine"}); }},
      {8, "Jacobian stability trend and bound", 120.0,
       [&] {
         return from_reports({rngd::check_jacobian_stability(rngd::JacobianStabilitySpec{}, seed, threads)},
                             {"median_ratio"});
       }},
      {9, "KL quadratic form", 10.0,
       [&] { return from_reports({rngd::check_kl_quadratic(seed)}, {"ratio_min_t=0.001", "ratio_max_t=0.001"}); }},
      {10, "byte-identical repeated outputs", 0.0, [&] { return determinism(seed, threads); }},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string budget = "";
    if (c.budget_s > 0.0) {
      budget = " / " + fmt(c.budget_s) + " s";
      if (secs > c.budget_s) {
        o.ok = false;
        o.detail += " (over runtime budget)";
      }
    }
    std::printf("[%s] criterion %d: %s  %s  (%.2f s%s)\n", o.ok ? "PASS" : "FAIL", c.id, c.what, o.detail.c_str(),
                secs, budget.c_str());
    std::fflush(stdout);
    failed += o.ok ? 0 : 1;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
