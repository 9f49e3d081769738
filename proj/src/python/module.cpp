// SPDX-License-Identifier: Apache-2.0
// Python bindings: the numeric building blocks and the run/validate/report
// entry points of the command-line tool.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "sm2/commands.hpp"
#include "sm2/config.hpp"
#include "sm2/energy.hpp"
#include "sm2/errors.hpp"
#include "sm2/ledger.hpp"
#include "sm2/lr_explorer.hpp"
#include "sm2/objective.hpp"
#include "sm2/report.hpp"

namespace py = pybind11;
using namespace sm2;

namespace {

py::dict comparison_dict(const ComparisonSummary& s) {
  py::dict d;
  d["name"] = s.name;
  d["energy_alpha1_wh"] = s.energy_alpha1_wh;
  d["energy_sm2_wh"] = s.energy_sm2_wh;
  d["energy_vanilla_wh"] = s.energy_vanilla_wh;
  d["reduction_pct"] = s.reduction_pct;
  d["parity"] = s.parity;
  d["symmetric_parity"] = s.symmetric_parity;
  return d;
}

}  // namespace

PYBIND11_MODULE(_sm2, m) {
  m.doc() = "Energy-aware successive halving with cyclical learning-rate exploration";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ComparisonError>(m, "ComparisonError", base.ptr());
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<MeasurementError>(m, "MeasurementError", base.ptr());
  py::register_exception<RunAborted>(m, "RunAborted", base.ptr());

  m.def("energy_per_epoch", [](const std::vector<double>& samples, double duration_s) {
    return energy_per_epoch(samples, duration_s);
  }, py::arg("power_samples"), py::arg("duration_s"));

  py::class_<SimPowerModel>(m, "SimPowerModel")
      .def(py::init<>())
      .def_readwrite("p_idle", &SimPowerModel::p_idle)
      .def_readwrite("p_max", &SimPowerModel::p_max)
      .def_readwrite("gamma", &SimPowerModel::gamma)
      .def_readwrite("b_sat", &SimPowerModel::b_sat)
      .def_readwrite("s_max", &SimPowerModel::s_max)
      .def_readwrite("kappa", &SimPowerModel::kappa)
      .def_readwrite("noise_seed", &SimPowerModel::noise_seed)
      .def_readwrite("noise_rel", &SimPowerModel::noise_rel)
      .def("validate", &SimPowerModel::validate)
      .def("power", &SimPowerModel::noiseless_power, py::arg("batch_size"))
      .def("throughput", &SimPowerModel::throughput, py::arg("batch_size"))
      .def("epoch_energy_wh", [](const SimPowerModel& pm, std::size_t b, std::size_t n) {
        return sim_epoch_energy(pm, b, n).energy_wh;
      }, py::arg("batch_size"), py::arg("n_samples"));

  m.def("objective_score", [](double p, double e, double lr, double alpha, double beta) {
    const ObjectiveWeights w{alpha, beta};
    w.validate();
    return objective_score({ConfigId{0}, p, e, lr}, w);
  }, py::arg("performance"), py::arg("energy"), py::arg("lr"), py::arg("alpha") = 0.75, py::arg("beta") = 0.5);

  m.def("lr_grid", [](double lr_min, double lr_max, std::size_t count, const std::string& spacing) {
    return LrGrid{lr_min, lr_max, count, grid_spacing_from_string(spacing)}.points();
  }, py::arg("lr_min") = 0.001, py::arg("lr_max") = 1.0, py::arg("count") = 20, py::arg("spacing") = "log");

  m.def("loss_curvature", [](const std::vector<double>& L) { return loss_curvature(L); }, py::arg("mean_loss"));

  m.def("select_stable_lr", [](const std::vector<double>& L, const std::vector<double>& grid, std::size_t window) {
    const auto s = select_stable_lr(L, grid, window);
    py::dict d;
    d["curvature"] = s.curvature;
    d["window_scores"] = s.window_scores;
    d["window_begin"] = s.window_begin;
    d["window_end"] = s.window_end;
    d["selected_index"] = s.selected_index;
    d["selected_lr"] = s.selected_lr;
    d["fallback"] = s.fallback;
    return d;
  }, py::arg("mean_loss"), py::arg("grid"), py::arg("window") = 5);

  m.def("compare_totals", [](std::string name, double a1, double sm, double va) {
    return comparison_dict(compare_totals(std::move(name), a1, sm, va));
  }, py::arg("name"), py::arg("energy_alpha1_wh"), py::arg("energy_sm2_wh"), py::arg("energy_vanilla_wh"));

  m.def("run", [](const std::filesystem::path& config, std::optional<std::filesystem::path> out_dir,
                           std::optional<std::uint64_t> seed, std::optional<std::string> mode,
                           std::optional<double> alpha) {
    RunArgs a;
    a.config = config;
    a.out_dir = std::move(out_dir);
    a.seed = seed;
    a.mode = std::move(mode);
    a.alpha = alpha;
    std::ostringstream out;
    py::gil_scoped_release release;
    run_experiment(a, out);
    return out.str();
  }, py::arg("config"), py::arg("out_dir") = py::none(), py::arg("seed") = py::none(),
        py::arg("mode") = py::none(), py::arg("alpha") = py::none());

  m.def("validate", [](const std::filesystem::path& config, std::optional<std::uint64_t> seed) {
    ValidateArgs a;
    a.config = config;
    a.seed = seed;
    std::ostringstream out;
    validate_experiment(a, out);
    return out.str();
  }, py::arg("config"), py::arg("seed") = py::none());

  m.def("ledger_summary", [](const std::filesystem::path& ledger) {
    return summary_text(RunLedger::read(ledger));
  }, py::arg("ledger"));

  m.def("compare", [](const std::filesystem::path& a1, const std::filesystem::path& sm,
                      const std::filesystem::path& va, std::string name) {
    return comparison_dict(compare(RunLedger::read(a1), RunLedger::read(sm), RunLedger::read(va), std::move(name)));
  }, py::arg("alpha1_ledger"), py::arg("sm2_ledger"), py::arg("vanilla_ledger"), py::arg("name") = "experiment");
}
