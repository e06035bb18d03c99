#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "papr/emtgm.hpp"
#include "papr/harness.hpp"
#include "papr/metrics.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

papr::ExperimentConfig parse_config(const std::string& text) {
    return papr::ExperimentConfig::from_json(json::parse(text));
}

std::string run_experiment(const std::string& config) {
    const auto cfg = parse_config(config);
    papr::ExperimentResult result;
    {
        py::gil_scoped_release release;
        result = papr::run_experiment(cfg);
    }
    return papr::results_json(result).dump();
}

std::string run_trial(const std::string& config, int trial) {
    const auto cfg = parse_config(config);
    cfg.validate();
    papr::ExperimentResult result{cfg, {}};
    {
        py::gil_scoped_release release;
        result.trials.push_back(papr::run_trial(cfg, trial));
    }
    return papr::results_json(result)["trials"][0].dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "PAPR-aware massive-MIMO precoding: experiment runner and metric helpers";

    m.def("run_experiment", &run_experiment, py::arg("config"),
          "Run a JSON experiment config; returns the results document as JSON text.");
    m.def("run_trial", &run_trial, py::arg("config"), py::arg("trial"),
          "Run one trial of a JSON experiment config; returns the trial record as JSON text.");
    m.def("child_seed", &papr::child_seed, py::arg("master"), py::arg("trial"), py::arg("stream"));

    m.def("papr_db", &papr::papr_db, py::arg("signal"), py::arg("oversample") = 1,
          "PAPR in dB of one antenna's time-domain samples.");
    m.def("ccdf", &papr::ccdf, py::arg("samples"), py::arg("thresholds"));
    m.def("ccdf_quantile", &papr::ccdf_quantile, py::arg("samples"), py::arg("probability"));
    m.def("to_db", &papr::to_db, py::arg("ratio"));

    m.def(
        "truncated_moments",
        [](double mu, double sigma2, double v) {
            const auto t = papr::truncated_moments(mu, sigma2, v);
            return py::make_tuple(t.phi, t.mean, t.second);
        },
        py::arg("mu"), py::arg("sigma2"), py::arg("v"),
        "(mass, mean, second moment) of N(mu, sigma2) restricted to [-v, v].");
    m.def("digamma", &papr::digamma, py::arg("x"));
    m.def("log_gamma", &papr::log_gamma, py::arg("x"));
}
