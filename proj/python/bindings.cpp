// Python module _rngd: geometry, damped solves, the acceptance rule, the
// experiment driver and the verification suites. Matrices cross as numpy
// arrays; points and tangents are passed as their n x p representatives.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rngd/data.hpp"
#include "rngd/experiment.hpp"
#include "rngd/fisher.hpp"
#include "rngd/manifold.hpp"
#include "rngd/optim.hpp"
#include "rngd/verify.hpp"

namespace py = pybind11;
using namespace rngd;

namespace {

RngdConfig rngd_config(const py::kwargs& kw) {
  ExperimentConfig cfg;
  for (auto item : kw) set_config_value(cfg, py::str(item.first), py::str(item.second));
  return cfg.rngd;
}

ExperimentConfig experiment_config(const py::dict& d) {
  ExperimentConfig cfg;
  for (auto item : d) {
    py::object v = py::reinterpret_borrow<py::object>(item.second);
    std::string s = py::isinstance<py::bool_>(v) ? (v.cast<bool>() ? "true" : "false") : py::str(v).cast<std::string>();
    set_config_value(cfg, py::str(item.first), s);
  }
  return cfg;
}

py::dict run_to_dict(const RunResult& r) {
  py::dict out;
  py::list records;
  for (const LogRecord& rec : r.records) {
    py::dict row;
    row["epoch"] = rec.epoch;
    row["grad_per_n"] = rec.grad_per_n;
    row["train"] = rec.train;
    row["test"] = rec.test;
    row["sigma"] = rec.sigma;
    records.append(row);
  }
  out["records"] = records;
  out["meta"] = r.meta.dump();
  out["split_checksum"] = r.split_checksum;
  out["final_train"] = r.final_train;
  out["final_test"] = r.final_test;
  return out;
}

py::list reports_to_list(const std::vector<CheckReport>& reports) {
  py::list out;
  for (const CheckReport& r : reports) {
    py::dict d;
    d["name"] = r.name;
    d["passed"] = r.passed();
    py::dict values;
    for (const Measurement& m : r.values) values[py::str(m.name)] = m.value;
    d["values"] = values;
    d["notes"] = r.notes;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_rngd, m) {
  m.doc() = "Riemannian natural gradient descent on Grassmann manifolds";
  m.attr("__version__") = RNGD_VERSION;

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

  m.def("random_point", [](Index n, Index p, std::uint64_t seed) {
    Rng rng(seed);
    return random_point(n, p, rng).mat();
  }, py::arg("n"), py::arg("p"), py::arg("seed") = 0);

  m.def("project", [](const Matrix& x, const Matrix& g) { return project(GrassmannPoint(x), g).mat(); },
        py::arg("x"), py::arg("g"), "Tangent projection (I - X X^T) G.");

  m.def("retract", [](const Matrix& x, const Matrix& xi, double t, const std::string& kind) {
    const GrassmannPoint base(x);
    return retract(base, TangentVector(base, xi), t, parse_retraction(kind)).mat();
  }, py::arg("x"), py::arg("xi"), py::arg("t") = 1.0, py::arg("kind") = "polar");

  m.def("exp_map", [](const Matrix& x, const Matrix& xi, double t) {
    const GrassmannPoint base(x);
    return exp_map(base, TangentVector(base, xi), t).mat();
  }, py::arg("x"), py::arg("xi"), py::arg("t") = 1.0);

  m.def("subspace_dist", [](const Matrix& a, const Matrix& b) {
    return subspace_dist(GrassmannPoint(a), GrassmannPoint(b));
  });

  m.def("solve_damped", [](const Matrix& x, const Matrix& g, const Matrix& a_factor, std::optional<Matrix> g_factor,
                           double lambda, const std::string& method) {
    const GrassmannPoint base(x);
    const KroneckerFisher f = g_factor ? KroneckerFisher(a_factor, *g_factor)
                                       : KroneckerFisher::with_projector_left(a_factor);
    SolveOptions opts;
    opts.method = parse_solve_method(method);
    const SolveResult r = solve_damped(f, lambda, TangentVector(base, g), opts);
    return py::make_tuple(r.d.mat(), r.rel_residual);
  }, py::arg("x"), py::arg("g"), py::arg("a_factor"), py::arg("g_factor") = py::none(), py::arg("lam"),
     py::arg("method") = "factored",
     "d = -(F + lam I)^{-1} g for F = a_factor (x) g_factor sandwiched by the tangent projector;\n"
     "g_factor=None uses the projector itself. Returns (d, relative residual).");

  m.def("decide", [](double rho, double grad_norm, double sigma, const py::kwargs& kw) {
    const Decision d = decide(rho, grad_norm, sigma, rngd_config(kw));
    return py::make_tuple(d.accept, d.sigma_next);
  }, py::arg("rho"), py::arg("grad_norm"), py::arg("sigma"), "Returns (accept, next sigma).");

  m.def("rsgd_step_size", &rsgd_step_size, py::arg("eta0"), py::arg("k"));

  m.def("config_keys", &config_keys);
  m.def("run_experiment", [](const py::dict& cfg) { return run_to_dict(run_experiment(experiment_config(cfg))); },
        py::arg("config"), "Runs one experiment; keys as in the command-line tool.");
  m.def("compare", [](const std::vector<py::dict>& cfgs, const std::string& output) {
    std::vector<ExperimentConfig> parsed;
    for (const py::dict& d : cfgs) parsed.push_back(experiment_config(d));
    py::list out;
    for (const RunResult& r : compare_experiments(parsed, output)) out.append(run_to_dict(r));
    return out;
  }, py::arg("configs"), py::arg("merged"));
  m.def("verify", [](const std::string& suite, std::uint64_t seed, int threads) {
    std::vector<CheckReport> reports;
    {
      py::gil_scoped_release release;
      reports = run_verify(suite, seed, threads);
    }
    return reports_to_list(reports);
  }, py::arg("suite") = "all", py::arg("seed") = 0, py::arg("threads") = 1);
}
