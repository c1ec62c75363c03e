#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "odeaug/cli.hpp"
#include "odeaug/control.hpp"
#include "odeaug/error.hpp"
#include "odeaug/experiment.hpp"
#include "odeaug/metrics.hpp"
#include "odeaug/ode.hpp"
#include "odeaug/scorer.hpp"
#include "odeaug/serialize.hpp"
#include "odeaug/series.hpp"

namespace py = pybind11;
using namespace odeaug;

namespace {

json parse_or_empty(const std::string& text) { return text.empty() ? json::object() : json::parse(text); }

Mask to_mask(const std::vector<bool>& v) { return Mask(v.begin(), v.end()); }

}  // namespace

PYBIND11_MODULE(_odeaug, m) {
  m.doc() = "ODE-augmented LSTM anomaly detection";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite", base.ptr());
  py::register_exception<DegenerateLabels>(m, "DegenerateLabels", base.ptr());

  py::class_<TimeSeries>(m, "TimeSeries")
      .def(py::init<std::vector<std::string>, double, Eigen::MatrixXd, std::optional<Mask>>(), py::arg("channels"),
           py::arg("sample_period"), py::arg("values"), py::arg("labels") = std::nullopt)
      .def_property_readonly("channels", &TimeSeries::channel_names)
      .def_property_readonly("sample_period", &TimeSeries::sample_period)
      .def_property_readonly("values", &TimeSeries::values)
      .def_property_readonly("labels", &TimeSeries::labels)
      .def("channel", &TimeSeries::channel)
      .def("__len__", &TimeSeries::length);

  m.def("read_csv", &read_csv_file, py::arg("path"));
  m.def("write_csv", &write_csv_file, py::arg("path"), py::arg("series"));
  m.def("derivative", &derivative, py::arg("x"), py::arg("dt"), py::arg("order"));
  m.def("curvature", &curvature, py::arg("x"), py::arg("dt"), py::arg("max_order") = 3);
  m.def("moving_average", &moving_average, py::arg("x"), py::arg("window"));

  m.def(
      "integrate",
      [](const std::vector<double>& params, const std::vector<double>& control, double x0, double dt,
         const std::string& structure) {
        return integrate(structure_by_id(structure), OdeParams::single(params, control.size()), control, x0, dt);
      },
      py::arg("params"), py::arg("control"), py::arg("x0"), py::arg("dt") = 1.0, py::arg("structure") = "linear1");

  m.def(
      "fit_ode",
      [](const Eigen::VectorXd& control, const Eigen::VectorXd& dependent, double dt, const std::string& config,
         const std::string& structure) {
        SeriesPair pair{control, dependent, dt};
        if (control.size() != dependent.size()) throw InvalidArgument("control and dependent lengths differ");
        const FitReport r = fit(pair, structure_by_id(structure), parse_or_empty(config).get<FitConfig>());
        return json(r).dump();
      },
      py::arg("control"), py::arg("dependent"), py::arg("dt") = 1.0, py::arg("config") = "",
      py::arg("structure") = "linear1", "Fit report as a JSON string.");

  m.def(
      "segment_control",
      [](const Eigen::VectorXd& u, std::optional<double> threshold, std::size_t min_duration) {
        const auto seg = segment_control(u, threshold, min_duration);
        py::list out;
        for (const auto& s : seg.segments)
          out.append(py::make_tuple(to_string(s.state), s.start, s.duration, s.level));
        return py::make_tuple(out, seg.threshold);
      },
      py::arg("control"), py::arg("threshold") = std::nullopt, py::arg("min_duration") = 2,
      "(segments, threshold); each segment is (state, start, duration, level).");

  m.def(
      "prf_metrics",
      [](const std::vector<bool>& predicted, const std::vector<bool>& actual, double beta) {
        const Prf p = prf_metrics(to_mask(predicted), to_mask(actual), beta);
        return py::make_tuple(p.precision, p.recall, p.f_score);
      },
      py::arg("predicted"), py::arg("actual"), py::arg("beta") = 1.0);

  m.def(
      "select_threshold",
      [](const std::vector<double>& scores, const std::vector<bool>& labels, double beta) {
        const auto c = select_threshold(scores, to_mask(labels), beta);
        return py::make_tuple(c.threshold, c.f_score, c.recall);
      },
      py::arg("scores"), py::arg("labels"), py::arg("beta") = 1.0, "(threshold, f_score, recall)");

  py::class_<GaussianScorer>(m, "GaussianScorer")
      .def_property_readonly("mean", &GaussianScorer::mean)
      .def_property_readonly("covariance", &GaussianScorer::covariance)
      .def("log_likelihood", &GaussianScorer::log_likelihood)
      .def("log_likelihood_rows", &GaussianScorer::log_likelihood_rows);
  m.def("fit_gaussian", &fit_gaussian, py::arg("errors"), py::arg("ridge") = 1e-6, py::arg("diagonal") = false);

  m.def(
      "run_experiment",
      [](const std::string& config) {
        const json cfg = parse_or_empty(config);
        const auto bc = cfg.value("benchmark", json::object()).get<BenchmarkConfig>();
        const auto ec = cfg.value("experiment", json::object()).get<ExperimentConfig>();
        std::vector<Regime> regimes;
        for (const auto& n : cfg.value("regimes", std::vector<std::string>{})) regimes.push_back(regime_from_name(n));
        if (regimes.empty()) regimes = all_regimes();
        py::gil_scoped_release release;
        return json(run_experiment(gen_benchmark(bc), regimes, ec)).dump();
      },
      py::arg("config") = "", "Metrics report as a JSON string.");

  m.def(
      "run_cli", [](const std::vector<std::string>& args) { return cli::execute(args); }, py::arg("args"),
      "Runs a command-line subcommand; returns the exit code.");
}
