// rngd: run experiments, compare algorithms, run the verification suites.
//
// Exit codes: 0 success, 1 failed check or numerical failure, 2 usage or
// configuration error.

#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rngd/error.hpp"
#include "rngd/experiment.hpp"
#include "rngd/parallel.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

// Flags for every config key, plus --config FILE and repeated --set key=value.
struct ConfigFlags {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key=value config file")->check(CLI::ExistingFile);
    app->add_option("--set", sets, "override as key=value (repeatable)");
    for (const std::string& key : rngd::config_keys()) {
      options[key] = app->add_option("--" + key, values[key], "config key " + key);
    }
    // Short alias used by the examples.
    options["fixed-step"] = app->add_flag("--fixed-step", "same as --fixed_step true");
  }

  rngd::ExperimentConfig resolve() const {
    rngd::ExperimentConfig cfg;
    if (!config_file.empty()) rngd::apply_config(cfg, rngd::read_config_file(config_file));
    apply_overrides(cfg);
    return cfg;
  }

  void apply_overrides(rngd::ExperimentConfig& cfg) const {
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw rngd::DataError("--set expects key=value, got '" + s + "'");
      rngd::set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    for (const std::string& key : rngd::config_keys()) {
      if (options.at(key)->count() > 0) rngd::set_config_value(cfg, key, values.at(key));
    }
    if (options.at("fixed-step")->count() > 0) cfg.rngd.fixed_step = true;
  }
};

void print_result(const rngd::RunResult& r) {
  std::printf("epochs %zu  final train %s  test %s  split %s\n", r.records.size(),
              rngd::format_double(r.final_train).c_str(), rngd::format_double(r.final_test).c_str(),
              r.meta.value("split_checksum", "").c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riemannian natural gradient experiments and checks"};
  app.require_subcommand(1);
  int threads = rngd::default_threads();
  app.add_option("--threads", threads, "worker threads (default: RNGD_THREADS or 1)")
      ->check(CLI::PositiveNumber);

  CLI::App* run = app.add_subcommand("run", "run one configured experiment");
  ConfigFlags run_flags;
  run_flags.attach(run);

  CLI::App* compare = app.add_subcommand("compare", "run several algorithms on the same data");
  std::vector<std::string> compare_files;
  std::string algos;
  std::string compare_output;
  compare->add_option("configs", compare_files, "config files, one per run")->check(CLI::ExistingFile);
  compare->add_option("--algos", algos, "comma-separated algorithms sharing the other settings");
  compare->add_option("--merged", compare_output, "merged CSV path")->required();
  ConfigFlags compare_flags;
  compare_flags.attach(compare);

  CLI::App* verify = app.add_subcommand("verify", "run verification checks");
  std::string suite = "all";
  std::uint64_t verify_seed = 0;
  std::string verify_output;
  verify->add_option("--suite", suite, "geometry|gradients|fisher|branch|kl|beta|jacobian|rates|lrmc|all");
  verify->add_option("--seed", verify_seed, "seed");
  verify->add_option("--output", verify_output, "report CSV path");

  for (CLI::App* sub : {run, compare, verify}) {
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) {
      const rngd::ExperimentConfig cfg = run_flags.resolve();
      print_result(rngd::run_experiment(cfg));
      return kOk;
    }
    if (*compare) {
      std::vector<rngd::ExperimentConfig> cfgs;
      for (const std::string& f : compare_files) {
        rngd::ExperimentConfig c;
        rngd::apply_config(c, rngd::read_config_file(f));
        compare_flags.apply_overrides(c);
        cfgs.push_back(c);
      }
      if (!algos.empty()) {
        std::stringstream ss(algos);
        std::string a;
        while (std::getline(ss, a, ',')) {
          rngd::ExperimentConfig c = compare_flags.resolve();
          c.algo = a;
          cfgs.push_back(c);
        }
      }
      for (const rngd::RunResult& r : rngd::compare_experiments(cfgs, compare_output)) print_result(r);
      return kOk;
    }
    if (*verify) {
      const std::vector<rngd::CheckReport> reports = rngd::run_verify(suite, verify_seed, threads);
      if (!verify_output.empty()) rngd::write_file_atomic(verify_output, rngd::reports_csv(reports));
      std::fputs(rngd::reports_summary(reports).c_str(), stdout);
      for (const rngd::CheckReport& r : reports) {
        if (!r.passed()) return kFailed;
      }
      return kOk;
    }
  } catch (const rngd::NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailed;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\nRun with --help for usage.\n", e.what());
    return kUsage;
  }
  return kUsage;
}
