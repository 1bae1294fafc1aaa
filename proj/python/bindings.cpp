#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tdlab/cli.hpp"
#include "tdlab/config.hpp"
#include "tdlab/expression.hpp"
#include "tdlab/verify.hpp"

namespace py = pybind11;
using namespace tdlab;

namespace {

// JSON crosses the boundary as text; the Python side parses it.
std::string run_text(const std::string& text, std::optional<std::uint64_t> seed) {
  const RunConfig rc = parse_config(text, seed);
  nlohmann::json j = run_experiment(rc.kind, rc.experiment).to_json();
  j["provenance"] = {{"tool", "tdlab " + tool_version()}, {"config_hash", rc.hash}, {"seed", rc.seed}};
  return j.dump();
}

SystemConfig make_system(double a, double b, int M, int N, double g, double eps) {
  SystemConfig c;
  c.box = build_grid(a, b, M);
  c.particles = N;
  c.statistics = N == 1 ? Statistics::Single : Statistics::FermionSinglet;
  c.interaction_strength = g;
  c.softcore_epsilon = eps;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Density-to-potential inversion on a 1D lattice";

  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(config_error.ptr(), e.what());
    } catch (const NumericalError& e) {
      PyErr_SetString(numerical_error.ptr(), e.what());
    }
  });

  m.def("version", &tool_version);

  py::class_<Grid>(m, "Grid")
      .def_readonly("a", &Grid::a)
      .def_readonly("b", &Grid::b)
      .def_readonly("M", &Grid::M)
      .def_property_readonly("h", &Grid::h)
      .def("nodes", &Grid::nodes)
      .def("__repr__", [](const Grid& g) {
        return "Grid(a=" + std::to_string(g.a) + ", b=" + std::to_string(g.b) + ", M=" + std::to_string(g.M) + ")";
      });
  m.def("build_grid", &build_grid, py::arg("a"), py::arg("b"), py::arg("M"));

  m.def("evaluate", [](const std::string& expr, const Grid& g) { return Expression::parse(expr).on_grid(g); },
        py::arg("expr"), py::arg("grid"), "Sample an expression in x on the grid nodes.");

  m.def("gradient", &gradient, py::arg("grid"), py::arg("f"));
  m.def("divergence", &divergence, py::arg("grid"), py::arg("f"));

  m.def(
      "solve_sturm",
      [](const Grid& g, const Field& n, const Field& zeta, double tol, double floor) {
        SLOptions o;
        o.tol = tol;
        const SLSolution s = solve_sl(make_sl_problem(g, n, zeta, floor), o);
        return py::make_tuple(s.v, s.diagnostics.to_json().dump());
      },
      py::arg("grid"), py::arg("n"), py::arg("zeta"), py::arg("tol") = 1e-10,
      py::arg("floor") = kDefaultDensityFloor,
      "Solve div(n grad v) = zeta with v = 0 at the walls; returns (v, diagnostics json).");

  m.def("poincare_constant", [](const Grid& g) { return estimate_poincare(g); });

  m.def(
      "ground_state_density",
      [](const Grid& g, int N, double strength, double epsilon, const Field& v) {
        const ManyBodySystem sys = build_system(make_system(g.a, g.b, g.M, N, strength, epsilon));
        double E = 0.0;
        const Field n = density(sys, ground_state(sys, v, &E));
        return py::make_tuple(n, E);
      },
      py::arg("grid"), py::arg("N"), py::arg("strength"), py::arg("epsilon"), py::arg("v"));

  m.def("config_hash", [](const std::string& text, std::optional<std::uint64_t> seed) { return parse_config(text, seed).hash; },
        py::arg("text"), py::arg("seed") = py::none());
  m.def("validate_text", [](const std::string& text) { return parse_config(text).document.dump(); });
  m.def("run_text", &run_text, py::arg("text"), py::arg("seed") = py::none(),
        py::call_guard<py::gil_scoped_release>());
  m.def("run_config_file", &run_config_file, py::arg("path"), py::arg("out_dir") = py::none(),
        py::arg("seed") = py::none(), py::arg("quiet") = true, py::call_guard<py::gil_scoped_release>());
}
