#pragma once

// Experiment configuration and the drivers behind the command-line tool.
// Configs are flat key=value text; later sources override earlier ones.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "rngd/optim.hpp"
#include "rngd/run_log.hpp"
#include "rngd/verify.hpp"

namespace rngd {

struct ExperimentConfig {
  std::string problem = "lrmc";  // lrmc | subspace | nnbn
  std::string algo = "rngd";     // rngd | rsgd | rgd | rsvrg | rcg | det-rngd
  /// Data file; empty selects the synthetic generator.
  std::string dataset;
  /// auto | movielens | jester | csv | msl; auto goes by extension.
  std::string format = "auto";
  std::string id_mode = "dense";
  bool jester_leading_count = false;
  /// Comma-separated generator overrides, e.g. "n=60,N=200,p=4,obs=0.3,snr=20".
  std::string synthetic;
  Index p = 0;  // 0: take p from the synthetic spec (or 4 for files)
  /// Train fraction; 1 keeps every entry for training.
  double split = 0.5;
  int epochs = 50;
  std::uint64_t seed = 0;
  std::string output;

  /// Minibatches of 20 (RNGD) and 10 (stochastic baselines) unless overridden.
  RngdConfig rngd = [] {
    RngdConfig c;
    c.grad_batch = 20;
    return c;
  }();
  FirstOrderConfig first_order = [] {
    FirstOrderConfig c;
    c.batch = 10;
    return c;
  }();

  double msl_lambda = 0.1;
  std::string msl_gradient = "exact";
  Index width = 1024;  // nnbn hidden width m

  /// Throws DataError on a bad selector or an unreadable dataset path.
  void validate() const;
};

/// Keys accepted by set_config_value, in a stable order.
const std::vector<std::string>& config_keys();
/// Throws DataError on an unknown key or unparsable value.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
/// Reads `key = value` lines; `#` starts a comment.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);
void apply_config(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv);
/// Every key with its resolved value.
nlohmann::json config_json(const ExperimentConfig& cfg);

struct RunResult {
  std::vector<LogRecord> records;
  nlohmann::json meta;
  /// Identifies the data and its train/test assignment.
  std::uint64_t split_checksum = 0;
  double final_train = 0.0;
  double final_test = 0.0;
};

/// Runs one configured experiment; writes the RunLog when cfg.output is set.
/// Throws NumericalError when a metric becomes non-finite.
RunResult run_experiment(const ExperimentConfig& cfg);

/// Runs every config (at least two, same problem and data) and writes one CSV
/// with columns epoch,<tag>_train,<tag>_test,... to `output`. Each run's log
/// goes next to it as <stem>_<tag>.csv.
std::vector<RunResult> compare_experiments(const std::vector<ExperimentConfig>& cfgs,
                                           const std::filesystem::path& output);

/// geometry, gradients, fisher, branch, kl, beta, jacobian, rates, lrmc or all.
const std::vector<std::string>& verify_suites();
std::vector<CheckReport> run_verify(const std::string& suite, std::uint64_t seed, int threads);

}  // namespace rngd
