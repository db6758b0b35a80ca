#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hforge/commands.hpp"
#include "hforge/expression.hpp"
#include "hforge/connection.hpp"
#include "hforge/geometry.hpp"
#include "hforge/pipeline.hpp"
#include "hforge/scenario.hpp"

namespace py = pybind11;
using namespace hforge;

namespace {

py::dict check_dict(const Check& c) {
  py::dict d;
  d["stage"] = c.stage;
  d["check"] = c.name;
  d["value"] = c.value;
  d["tolerance"] = c.tolerance;
  d["comparison"] = to_string(c.comparison);
  d["passed"] = c.passed;
  d["expected_fail"] = c.expected_fail;
  d["location"] = c.location;
  return d;
}

}  // namespace

PYBIND11_MODULE(_hforge, m) {
  m.doc() = "Symplectic connections on S2 x S2: transport, holonomy killing, verification";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("name", &Scenario::name)
      .def_readonly("commands", &Scenario::commands)
      .def_readonly("expected_fail", &Scenario::expected_fail);

  m.def("parse_scenario", &parse_scenario, py::arg("text"));
  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def("command_names", &command_names);

  m.def(
      "run",
      [](const Scenario& s, std::optional<std::vector<std::string>> commands, std::optional<double> inflate_c) {
        CommandOptions opts;
        opts.inflate_c = inflate_c;
        RunOutput out;
        {
          py::gil_scoped_release release;
          out = run_commands(s, commands ? *commands : default_commands(s), opts);
        }
        py::dict d;
        d["ok"] = out.report.all_satisfied();
        py::list checks;
        for (const auto& c : out.report.checks()) checks.append(check_dict(c));
        d["checks"] = checks;
        d["files"] = out.files;
        return d;
      },
      py::arg("scenario"), py::arg("commands") = py::none(), py::arg("inflate_c") = py::none(),
      "Run commands on a scenario; returns {'ok', 'checks', 'files'}.");

  m.def(
      "generators",
      [](const Scenario& s, int per_unit) { return cohomology_generators(build_initial_form(s), per_unit); },
      py::arg("scenario"), py::arg("per_unit") = 256,
      "Integrals over [S2 x pt], [pt x S2], [D x pt], [pt x D] for the initial form.");

  m.def(
      "holonomy_residuals",
      [](const Scenario& s, const std::vector<double>& lambdas) {
        const PipelineOptions o = pipeline_options(s);
        std::vector<double> out;
        for (const auto& h : holonomy_scan(build_initial_form(s), lambdas, o.transport, o.markers)) {
          out.push_back(h.residual);
        }
        return out;
      },
      py::arg("scenario"), py::arg("lambdas"));

  m.def("scan_latitudes", &scan_latitudes);
  m.def("pfaffian", &pfaffian, py::arg("m"));

  m.def(
      "linear_interpolation_check",
      [](const Matrix4& a, const Matrix4& b, const std::array<std::array<double, 4>, 3>& hyperplane, int t_points) {
        const InterpolationCheck c = linear_interpolation_check(a, b, hyperplane, t_points);
        py::dict d;
        d["accepted"] = c.accepted;
        d["positive"] = c.positive;
        d["diagnostic"] = c.diagnostic;
        d["min_pfaffian"] = c.min_pfaffian;
        d["min_closed_form"] = c.min_closed_form;
        return d;
      },
      py::arg("omega"), py::arg("omega_prime"), py::arg("hyperplane"), py::arg("t_points") = 101);
}
