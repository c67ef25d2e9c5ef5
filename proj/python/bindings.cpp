#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kglab/cones.hpp"
#include "kglab/fit.hpp"
#include "kglab/harness.hpp"
#include "kglab/randomization.hpp"

namespace py = pybind11;
using namespace kglab;

namespace {

py::dict threshold_dict(const ThresholdReport& r) {
    py::dict d;
    d["d"] = r.d;
    d["s_min"] = r.s_min.str();
    d["s_limit"] = r.s_limit.str();
    d["s_energy"] = r.s_energy.str();
    d["s_dispersive"] = r.s_dispersive.str();
    d["theta_opt"] = r.theta_opt.str();
    d["feasible"] = r.feasible;
    d["binding"] = r.binding;
    return d;
}

py::dict run(const std::string& kind, const std::string& config_text, const std::string& out_dir,
             std::optional<std::uint64_t> seed) {
    auto cfg = Config::parse(config_text);
    if (seed) cfg.set("experiment.seed", std::to_string(*seed));
    auto ec = ExperimentConfig::from_config(parse_kind(kind), cfg);
    RunManifest man;
    {
        py::gil_scoped_release release;
        man = run_experiment(ec, out_dir);
    }
    py::dict d;
    d["kind"] = man.kind;
    d["pass"] = man.pass;
    d["failures"] = man.failures;
    d["config_hash"] = hex64(man.config_hash);
    d["output_hash"] = hex64(man.output_hash());
    py::list outs;
    for (const auto& o : man.outputs) outs.append(py::make_tuple(o.path, hex64(o.hash), o.bytes));
    d["outputs"] = outs;
    return d;
}

} // namespace

PYBIND11_MODULE(_kglab, m) {
    m.doc() = "Klein-Gordon numerical laboratory";
    m.attr("__version__") = kglab_version();

    py::register_exception<Error>(m, "KglabError", PyExc_ValueError);

    m.def("kinds", [] {
        std::vector<std::string> out;
        for (auto k : all_kinds()) out.push_back(kind_name(k));
        return out;
    });
    m.def("default_config", [](const std::string& kind) { return default_config_text(parse_kind(kind)); },
          py::arg("kind"));
    m.def("validate_config",
          [](const std::string& kind, const std::string& text) {
              return validate_config(parse_kind(kind), Config::parse(text));
          },
          py::arg("kind"), py::arg("config_text"));
    m.def("run_experiment", &run, py::arg("kind"), py::arg("config_text"), py::arg("out_dir"),
          py::arg("seed") = py::none(),
          "Run one experiment; returns the manifest as a dict.");

    m.def("regularity_threshold_limit", [](int d) { return threshold_dict(regularity_threshold_limit(d)); },
          py::arg("d"));
    m.def("regularity_threshold",
          [](int d, const std::string& delta, const std::string& theta, const std::string& beta) {
              return threshold_dict(
                  regularity_threshold(d, Rational::parse(delta), Rational::parse(theta), Rational::parse(beta)));
          },
          py::arg("d"), py::arg("delta"), py::arg("theta"), py::arg("beta"));

    m.def("loglog_fit",
          [](const std::vector<double>& x, const std::vector<double>& y) {
              auto r = loglog_fit(x, y);
              return py::make_tuple(r.slope, r.intercept, r.residual_rms);
          },
          py::arg("x"), py::arg("y"), "Least-squares (slope, intercept, rms residual) of log y on log x.");
    m.def("gaussian_expected_abs_max", &gaussian_expected_abs_max, py::arg("J"));
    m.def("fnv1a64", [](const std::string& s) { return hex64(fnv1a64(s)); }, py::arg("data"));

    m.def("read_field",
          [](const std::string& path) {
              auto f = read_field(path);
              std::vector<py::ssize_t> shape(f.grid.d, f.grid.n);
              py::array_t<double> a(shape);
              std::copy(f.v.begin(), f.v.end(), a.mutable_data());
              return py::make_tuple(a, f.grid.L);
          },
          py::arg("path"), "Read a binary field snapshot; returns (samples, L).");
}
