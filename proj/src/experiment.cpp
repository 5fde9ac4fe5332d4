#include "rngd/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "rngd/data.hpp"
#include "rngd/error.hpp"
#include "rngd/parallel.hpp"

namespace rngd {

namespace {

using nlohmann::json;

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw DataError("config key '" + key + "': expected a number, got '" + v + "'");
}

long long to_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw DataError("config key '" + key + "': expected an integer, got '" + v + "'");
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long d = std::stoull(v, &used);
    if (used == v.size() && v.find('-') == std::string::npos) return d;
  } catch (const std::exception&) {
  }
  throw DataError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw DataError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::string num(double v) { return format_double(v); }

#define RNGD_FIELD(name, expr_set, expr_get)                                                  \
  Field {                                                                                     \
    name, [](ExperimentConfig& c, const std::string& v) { expr_set; },                        \
        [](const ExperimentConfig& c) -> std::string { return expr_get; }                     \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f{
      RNGD_FIELD("problem", c.problem = v, c.problem),
      RNGD_FIELD("algo", c.algo = v, c.algo),
      RNGD_FIELD("dataset", c.dataset = v, c.dataset),
      RNGD_FIELD("format", c.format = v, c.format),
      RNGD_FIELD("id_mode", c.id_mode = v, c.id_mode),
      RNGD_FIELD("jester_leading_count", c.jester_leading_count = to_bool("jester_leading_count", v),
                 c.jester_leading_count ? "true" : "false"),
      RNGD_FIELD("synthetic", c.synthetic = v, c.synthetic),
      RNGD_FIELD("p", c.p = to_integer("p", v), std::to_string(c.p)),
      RNGD_FIELD("split", c.split = to_double("split", v), num(c.split)),
      RNGD_FIELD("epochs", c.epochs = static_cast<int>(to_integer("epochs", v)), std::to_string(c.epochs)),
      RNGD_FIELD("seed", c.seed = to_seed("seed", v), std::to_string(c.seed)),
      RNGD_FIELD("output", c.output = v, c.output),
      RNGD_FIELD("sigma0", c.rngd.sigma0 = to_double("sigma0", v), num(c.rngd.sigma0)),
      RNGD_FIELD("sigma_min", c.rngd.sigma_min = to_double("sigma_min", v), num(c.rngd.sigma_min)),
      RNGD_FIELD("eta1", c.rngd.eta1 = to_double("eta1", v), num(c.rngd.eta1)),
      RNGD_FIELD("eta2", c.rngd.eta2 = to_double("eta2", v), num(c.rngd.eta2)),
      RNGD_FIELD("gamma", c.rngd.gamma = to_double("gamma", v), num(c.rngd.gamma)),
      RNGD_FIELD("grad_batch", c.rngd.grad_batch = to_integer("grad_batch", v),
                 std::to_string(c.rngd.grad_batch)),
      RNGD_FIELD("fisher_batch", c.rngd.fisher_batch = to_integer("fisher_batch", v),
                 std::to_string(c.rngd.fisher_batch)),
      RNGD_FIELD("eval_batch", c.rngd.eval_batch = to_integer("eval_batch", v),
                 std::to_string(c.rngd.eval_batch)),
      RNGD_FIELD("retraction", c.rngd.retraction = c.first_order.retraction = parse_retraction(v),
                 std::string(to_string(c.rngd.retraction))),
      RNGD_FIELD("solver", c.rngd.solver.method = parse_solve_method(v),
                 std::string(to_string(c.rngd.solver.method))),
      RNGD_FIELD("cg_tol", c.rngd.solver.cg_tol = to_double("cg_tol", v), num(c.rngd.solver.cg_tol)),
      RNGD_FIELD("cg_maxit", c.rngd.solver.cg_maxit = static_cast<int>(to_integer("cg_maxit", v)),
                 std::to_string(c.rngd.solver.cg_maxit)),
      RNGD_FIELD("grad_tol", c.rngd.grad_tol = to_double("grad_tol", v), num(c.rngd.grad_tol)),
      RNGD_FIELD("fixed_step", c.rngd.fixed_step = to_bool("fixed_step", v),
                 c.rngd.fixed_step ? "true" : "false"),
      RNGD_FIELD("step", c.rngd.step = to_double("step", v), num(c.rngd.step)),
      RNGD_FIELD("step0", c.first_order.step0 = to_double("step0", v), num(c.first_order.step0)),
      RNGD_FIELD("batch", c.first_order.batch = to_integer("batch", v), std::to_string(c.first_order.batch)),
      RNGD_FIELD("armijo_c", c.first_order.armijo_c = to_double("armijo_c", v), num(c.first_order.armijo_c)),
      RNGD_FIELD("msl_lambda", c.msl_lambda = to_double("msl_lambda", v), num(c.msl_lambda)),
      RNGD_FIELD("msl_gradient", c.msl_gradient = v, c.msl_gradient),
      RNGD_FIELD("width", c.width = to_integer("width", v), std::to_string(c.width)),
  };
  return f;
}

#undef RNGD_FIELD

std::map<std::string, std::string> parse_pairs(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw DataError("synthetic spec entry '" + item + "' is not key=value");
    out[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
  }
  return out;
}

void reject_unknown(const std::map<std::string, std::string>& kv, std::initializer_list<const char*> known,
                    const std::string& problem) {
  for (const auto& [k, v] : kv) {
    bool ok = false;
    for (const char* name : known) ok = ok || k == name;
    if (!ok) throw DataError("synthetic key '" + k + "' does not apply to problem " + problem);
  }
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_matrix(std::uint64_t h, const Matrix& m) {
  const Index dims[2] = {m.rows(), m.cols()};
  h = fnv1a(h, dims, sizeof dims);
  return fnv1a(h, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

std::uint64_t task_checksum(const TaskSplit& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto* side : {&s.train, &s.test}) {
    for (const Task& t : *side) {
      h = hash_matrix(h, t.x);
      h = hash_matrix(h, t.y);
    }
    const std::uint64_t sep = 0x5eed;
    h = fnv1a(h, &sep, sizeof sep);
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Seeds derived from the run seed: data, split and initial point are shared by
// every algorithm run with the same seed.
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kSplitStream = 2;
constexpr std::uint64_t kInitStream = 3;

std::string resolve_format(const ExperimentConfig& cfg) {
  if (cfg.format != "auto") return cfg.format;
  if (cfg.problem == "subspace") return "msl";
  const std::filesystem::path path(cfg.dataset);
  if (path.extension() == ".dat") return "movielens";
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  return first.rfind("#", 0) == 0 ? "csv" : "jester";
}

struct PreparedProblem {
  std::unique_ptr<ModelProblem> problem;
  std::uint64_t checksum = 0;
  json data_meta;
};

PreparedProblem prepare_lrmc(const ExperimentConfig& cfg) {
  RatingDataset ds;
  Index p = cfg.p;
  json meta;
  if (cfg.dataset.empty()) {
    const auto kv = parse_pairs(cfg.synthetic);
    reject_unknown(kv, {"n", "N", "p", "obs", "snr"}, "lrmc");
    SynthLrmcSpec spec;
    if (kv.count("n")) spec.n = to_integer("n", kv.at("n"));
    if (kv.count("N")) spec.samples = to_integer("N", kv.at("N"));
    if (kv.count("p")) spec.p = to_integer("p", kv.at("p"));
    if (kv.count("obs")) spec.obs_fraction = to_double("obs", kv.at("obs"));
    if (kv.count("snr")) spec.snr_db = to_double("snr", kv.at("snr"));
    spec.seed = shard_seed(cfg.seed, kDataStream);
    if (p == 0) p = spec.p;
    SynthLrmc s = synth_lrmc(spec);
    ds = std::move(s.ratings);
    meta["noise_std"] = s.noise_std;
  } else {
    const std::string fmt = resolve_format(cfg);
    if (fmt == "movielens") {
      const IdMode mode = cfg.id_mode == "raw" ? IdMode::Raw : IdMode::Dense;
      MovieLensData ml = load_movielens(cfg.dataset, mode);
      if (!cfg.output.empty()) write_id_mapping(cfg.output + ".ids", ml.ids);
      ds = std::move(ml.ratings);
    } else if (fmt == "jester") {
      ds = load_jester(cfg.dataset, cfg.jester_leading_count);
    } else if (fmt == "csv") {
      ds = read_ratings_csv(cfg.dataset);
    } else {
      throw DataError("format '" + fmt + "' does not apply to problem lrmc");
    }
    meta["format"] = fmt;
    if (p == 0) p = 4;
  }
  meta["rows"] = ds.n_rows;
  meta["cols"] = ds.n_cols;
  meta["entries"] = ds.entries.size();
  PreparedProblem out;
  if (cfg.split >= 1.0) {
    SplitDataset whole{ds, ds, 1.0, 0};
    whole.test.entries.clear();
    out.checksum = whole.checksum();
    out.problem = std::make_unique<LrmcProblem>(make_lrmc_problem(ds, p));
  } else {
    const SplitDataset s = split(ds, cfg.split, shard_seed(cfg.seed, kSplitStream));
    out.checksum = s.checksum();
    meta["train_entries"] = s.train.entries.size();
    meta["test_entries"] = s.test.entries.size();
    out.problem = std::make_unique<LrmcProblem>(make_lrmc_problem(s, p));
  }
  const auto& lp = static_cast<const LrmcProblem&>(*out.problem);
  meta["short_columns"] = lp.short_columns();
  out.data_meta = std::move(meta);
  return out;
}

PreparedProblem prepare_subspace(const ExperimentConfig& cfg) {
  std::vector<Task> tasks;
  Index p = cfg.p;
  json meta;
  if (cfg.dataset.empty()) {
    const auto kv = parse_pairs(cfg.synthetic);
    reject_unknown(kv, {"n", "tasks", "rows", "p", "snr"}, "subspace");
    SynthMslSpec spec;
    if (kv.count("n")) spec.n = to_integer("n", kv.at("n"));
    if (kv.count("tasks")) spec.tasks = to_integer("tasks", kv.at("tasks"));
    if (kv.count("rows")) spec.rows_per_task = to_integer("rows", kv.at("rows"));
    if (kv.count("p")) spec.p = to_integer("p", kv.at("p"));
    if (kv.count("snr")) spec.snr_db = to_double("snr", kv.at("snr"));
    spec.seed = shard_seed(cfg.seed, kDataStream);
    if (p == 0) p = spec.p;
    tasks = synth_msl(spec).tasks;
  } else {
    const std::string fmt = resolve_format(cfg);
    if (fmt != "msl") throw DataError("format '" + fmt + "' does not apply to problem subspace");
    tasks = load_msl_csv(cfg.dataset);
    if (p == 0) p = 6;
  }
  const MslGradient mode = cfg.msl_gradient == "approximate" ? MslGradient::Approximate : MslGradient::Exact;
  TaskSplit ts;
  if (cfg.split >= 1.0) {
    ts.train = tasks;
    for (const Task& t : tasks) ts.test.push_back({Matrix(0, t.x.cols()), Vector(0)});
  } else {
    ts = split_tasks(tasks, cfg.split, shard_seed(cfg.seed, kSplitStream));
  }
  meta["tasks"] = tasks.size();
  PreparedProblem out;
  out.checksum = task_checksum(ts);
  out.problem = std::make_unique<SubspaceLearningProblem>(p, cfg.msl_lambda, std::move(ts.train),
                                                          std::move(ts.test), mode);
  out.data_meta = std::move(meta);
  return out;
}

void check_metrics(const LogRecord& r) {
  if (!std::isfinite(r.train) || std::isinf(r.test)) {
    throw NumericalError("non-finite metric at epoch " + std::to_string(r.epoch) + " (train " +
                         format_double(r.train) + ", test " + format_double(r.test) + ")");
  }
}

RunResult finish(const ExperimentConfig& cfg, std::vector<LogRecord> records, json meta,
                 std::uint64_t checksum) {
  RunResult res;
  res.split_checksum = checksum;
  meta["split_checksum"] = hex(checksum);
  res.meta = std::move(meta);
  if (!cfg.output.empty()) {
    RunLogWriter writer(cfg.output, res.meta);
    for (const LogRecord& r : records) {
      check_metrics(r);
      writer.append(r);
    }
    writer.commit();
  } else {
    for (const LogRecord& r : records) check_metrics(r);
  }
  res.final_train = records.empty() ? std::nan("") : records.back().train;
  res.final_test = records.empty() ? std::nan("") : records.back().test;
  res.records = std::move(records);
  return res;
}

RunResult run_nnbn(const ExperimentConfig& cfg, json meta) {
  if (cfg.algo != "det-rngd") throw DataError("problem nnbn supports only algo det-rngd");
  if (!cfg.dataset.empty()) throw DataError("problem nnbn uses synthetic data only");
  const auto kv = parse_pairs(cfg.synthetic);
  reject_unknown(kv, {"n", "N", "m"}, "nnbn");
  const Index n = kv.count("n") ? to_integer("n", kv.at("n")) : 16;
  const Index samples = kv.count("N") ? to_integer("N", kv.at("N")) : 10;
  const Index m = kv.count("m") ? to_integer("m", kv.at("m")) : cfg.width;
  const SynthNet synth = synth_nn(n, samples, shard_seed(cfg.seed, kDataStream));
  Rng rng(shard_seed(cfg.seed, kInitStream));
  const TwoLayerBnNet net = TwoLayerBnNet::with_sphere_moments(random_signs(m, rng), n);
  const UnitRowPoint theta0 = random_unit_rows(m, n, rng);
  const ResidualTrace trace = nn_ngd_run(net, synth.data, theta0, cfg.rngd.step, cfg.epochs);
  std::vector<LogRecord> records;
  const double count = static_cast<double>(samples);
  for (std::size_t k = 1; k < trace.residuals.size(); ++k) {
    const double r = trace.residuals[k];
    records.push_back({static_cast<int>(k), static_cast<double>(k), 0.5 * r * r / count, std::nan(""),
                       cfg.rngd.step, 0.0});
  }
  meta["data"] = {{"n", n}, {"samples", samples}, {"width", m},
                  {"residual_mean_norm", synth.residual_mean_norm}};
  meta["ridge_used"] = trace.ridge_used;
  std::uint64_t h = hash_matrix(14695981039346656037ULL, synth.data.x);
  h = hash_matrix(h, synth.data.y);
  return finish(cfg, std::move(records), std::move(meta), h);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (problem != "lrmc" && problem != "subspace" && problem != "nnbn") {
    throw DataError("unknown problem '" + problem + "' (lrmc, subspace, nnbn)");
  }
  if (algo != "rngd" && algo != "rsgd" && algo != "rgd" && algo != "rsvrg" && algo != "rcg" &&
      algo != "det-rngd") {
    throw DataError("unknown algo '" + algo + "' (rngd, rsgd, rgd, rsvrg, rcg, det-rngd)");
  }
  if (algo == "det-rngd" && problem != "nnbn") throw DataError("algo det-rngd needs problem nnbn");
  if (format != "auto" && format != "movielens" && format != "jester" && format != "csv" && format != "msl") {
    throw DataError("unknown format '" + format + "'");
  }
  if (id_mode != "dense" && id_mode != "raw") throw DataError("id_mode must be dense or raw");
  if (msl_gradient != "exact" && msl_gradient != "approximate") {
    throw DataError("msl_gradient must be exact or approximate");
  }
  if (!dataset.empty() && !std::filesystem::exists(dataset)) {
    throw DataError("dataset '" + dataset + "' does not exist");
  }
  if (!(split > 0.0 && split <= 1.0)) throw DataError("split must lie in (0, 1]");
  if (epochs < 0) throw DataError("epochs must be non-negative");
  if (p < 0) throw DataError("p must be non-negative");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Field& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (f.key == key) {
      try {
        f.set(cfg, value);
      } catch (const DataError&) {
        throw;
      } catch (const std::exception& e) {
        throw DataError("config key '" + key + "': " + e.what());
      }
      return;
    }
  }
  throw DataError("unknown config key '" + key + "'");
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void apply_config(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) set_config_value(cfg, k, v);
}

json config_json(const ExperimentConfig& cfg) {
  json j = json::object();
  for (const Field& f : fields()) j[f.key] = f.get(cfg);
  return j;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  json meta;
  meta["version"] = RNGD_VERSION;
  meta["config"] = config_json(cfg);
  if (cfg.problem == "nnbn") return run_nnbn(cfg, std::move(meta));

  PreparedProblem prep = cfg.problem == "lrmc" ? prepare_lrmc(cfg) : prepare_subspace(cfg);
  const ModelProblem& prob = *prep.problem;
  meta["data"] = prep.data_meta;
  Rng rng(shard_seed(cfg.seed, kInitStream));
  const GrassmannPoint u0 = random_point(prob.n(), prob.p(), rng);

  Trace trace;
  if (cfg.algo == "rngd") {
    RngdConfig rc = cfg.rngd;
    rc.max_epochs = cfg.epochs;
    rc.seed = cfg.seed;
    trace = rngd_run(prob, u0, rc);
  } else {
    FirstOrderConfig fo = cfg.first_order;
    fo.max_epochs = cfg.epochs;
    fo.seed = cfg.seed;
    fo.retraction = cfg.rngd.retraction;
    if (cfg.algo == "rsgd") {
      trace = rsgd_run(prob, u0, fo);
    } else if (cfg.algo == "rgd") {
      trace = rgd_run(prob, u0, fo);
    } else if (cfg.algo == "rsvrg") {
      trace = rsvrg_run(prob, u0, fo);
    } else {
      trace = rcg_run(prob, u0, fo);
    }
  }
  meta["accepted"] = trace.accepted;
  meta["rejected"] = trace.rejected;
  meta["converged"] = trace.converged;
  return finish(cfg, to_log_records(trace), std::move(meta), prep.checksum);
}

std::vector<RunResult> compare_experiments(const std::vector<ExperimentConfig>& cfgs,
                                           const std::filesystem::path& output) {
  if (cfgs.size() < 2) throw DataError("compare needs at least two configurations");
  const ExperimentConfig& first = cfgs.front();
  for (const ExperimentConfig& c : cfgs) {
    if (c.problem != first.problem || c.dataset != first.dataset || c.synthetic != first.synthetic ||
        c.split != first.split || c.seed != first.seed || c.p != first.p) {
      throw DataError("compare: configurations differ in problem, data, split, p or seed");
    }
  }
  std::vector<std::string> tags;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    std::string tag = cfgs[i].algo;
    int dup = 0;
    for (std::size_t j = 0; j < i; ++j) dup += cfgs[j].algo == cfgs[i].algo ? 1 : 0;
    if (dup > 0) tag += "_" + std::to_string(dup + 1);
    tags.push_back(tag);
  }
  std::vector<RunResult> results;
  const std::filesystem::path dir = output.parent_path();
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    ExperimentConfig c = cfgs[i];
    c.output = (dir / (output.stem().string() + "_" + tags[i] + ".csv")).string();
    results.push_back(run_experiment(c));
  }
  for (const RunResult& r : results) {
    if (r.split_checksum != results.front().split_checksum) {
      throw DataError("compare: runs saw different data splits");
    }
  }
  std::size_t rows = 0;
  for (const RunResult& r : results) rows = std::max(rows, r.records.size());
  std::ostringstream os;
  os << "epoch";
  for (const std::string& t : tags) os << ',' << t << "_train," << t << "_test";
  os << '\n';
  for (std::size_t k = 0; k < rows; ++k) {
    os << k + 1;
    for (const RunResult& r : results) {
      if (k < r.records.size()) {
        os << ',' << format_double(r.records[k].train) << ',' << format_double(r.records[k].test);
      } else {
        os << ",,";
      }
    }
    os << '\n';
  }
  write_file_atomic(output, os.str());
  return results;
}

const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> s{"geometry", "gradients", "fisher", "branch", "kl",
                                          "beta",     "jacobian",  "rates",  "lrmc",   "all"};
  return s;
}

std::vector<CheckReport> run_verify(const std::string& suite, std::uint64_t seed, int threads) {
  const bool all = suite == "all";
  bool known = false;
  for (const std::string& s : verify_suites()) known = known || s == suite;
  if (!known) throw DataError("unknown verify suite '" + suite + "'");
  std::vector<CheckReport> out;
  if (all || suite == "geometry") out.push_back(check_geometry(seed));
  if (all || suite == "gradients") out.push_back(check_gradients(seed));
  if (all || suite == "fisher") {
    out.push_back(check_fisher_consistency(seed));
    out.push_back(check_damped_solve(seed));
  }
  if (all || suite == "branch") out.push_back(check_branch(seed));
  if (all || suite == "kl") out.push_back(check_kl_quadratic(seed));
  if (all || suite == "beta") out.push_back(check_beta_tail(BetaTailSpec{}, seed, threads));
  if (all || suite == "jacobian") out.push_back(check_jacobian_stability(JacobianStabilitySpec{}, seed, threads));
  if (all || suite == "rates") {
    RateSpec linear;
    out.push_back(check_linear_rate(linear, seed, threads));
    RateSpec quad;
    quad.t = 1.0;
    out.push_back(check_quadratic_rate(quad, seed, threads));
  }
  if (all || suite == "lrmc") {
    out.push_back(check_lrmc_convergence(seed));
    out.push_back(check_lrmc_vs_rsgd(seed, 5, threads));
  }
  return out;
}

}  // namespace rngd
