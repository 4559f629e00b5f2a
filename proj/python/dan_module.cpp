#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dan/baselines.hpp"
#include "dan/bench.hpp"
#include "dan/cli.hpp"
#include "dan/errors.hpp"
#include "dan/plot.hpp"
#include "dan/training.hpp"

namespace py = pybind11;
using namespace dan;

namespace {

py::dict solution_dict(const MtspInstance& inst, const Solution& sol) {
  py::dict d;
  d["tours"] = sol.tours;
  d["lengths"] = sol.lengths;
  d["minmax"] = sol.minmax;
  d["minmax_source_units"] = sol.minmax * inst.scale;
  return d;
}

}  // namespace

PYBIND11_MODULE(dan_mtsp, mod) {
  mod.doc() = "MinMax multi-agent TSP: instances, heuristics and the attention policy";

  auto base = py::register_exception<Error>(mod, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(mod, "InvalidArgument", base.ptr());
  py::register_exception<ParseError>(mod, "ParseError", base.ptr());
  py::register_exception<ValidationError>(mod, "ValidationError", base.ptr());
  py::register_exception<TooLarge>(mod, "TooLarge", base.ptr());
  py::register_exception<ShapeError>(mod, "ShapeError", base.ptr());
  py::register_exception<CheckpointError>(mod, "CheckpointError", base.ptr());

  py::class_<MtspInstance>(mod, "Instance")
      .def_readwrite("name", &MtspInstance::name)
      .def_readwrite("m", &MtspInstance::m)
      .def_readwrite("scale", &MtspInstance::scale)
      .def_property_readonly("n", &MtspInstance::n)
      .def_property_readonly("coords",
                             [](const MtspInstance& i) {
                               std::vector<std::pair<double, double>> out;
                               for (const auto& p : i.coords) out.emplace_back(p.x, p.y);
                               return out;
                             })
      .def("to_json", &instance_to_json)
      .def_static("from_json", &instance_from_json, py::arg("text"))
      .def_static("read", &read_instance, py::arg("path"), py::arg("m") = 0)
      .def_static(
          "from_points",
          [](const std::vector<std::pair<double, double>>& pts, int m, const std::string& name) {
            std::vector<Point> p;
            for (const auto& [x, y] : pts) p.push_back({x, y});
            return normalize(p, m, name);
          },
          py::arg("points"), py::arg("m"), py::arg("name") = "")
      .def("__repr__", [](const MtspInstance& i) {
        return "<Instance " + (i.name.empty() ? std::string("?") : i.name) + " n=" + std::to_string(i.n()) +
               " m=" + std::to_string(i.m) + ">";
      });

  py::class_<DanParameters>(mod, "Model")
      .def_static("load", py::overload_cast<const std::string&>(&load_model), py::arg("path"))
      .def_static(
          "random",
          [](int d, std::uint64_t seed) {
            ModelConfig c;
            c.d = d;
            return DanParameters::create(c, seed);
          },
          py::arg("d") = 32, py::arg("seed") = 0)
      .def("save", [](const DanParameters& p, const std::string& path) { save_model(p, path); }, py::arg("path"))
      .def_property_readonly("d", [](const DanParameters& p) { return p.config.d; });

  mod.def("generate_instance", &generate_instance, py::arg("n"), py::arg("m"), py::arg("seed") = 0);

  mod.def("solver_ids", [] { return kSolverIds; });

  mod.def(
      "solve",
      [](const MtspInstance& inst, const std::string& solver, const DanParameters* model, int samples, double dg,
         std::uint64_t seed) {
        SolveOutcome out;
        {
          py::gil_scoped_release release;
          out = run_solver(solver, inst, model, samples, dg, seed);
        }
        py::dict d = solution_dict(inst, out.solution);
        d["solver"] = solver;
        d["sample_costs"] = out.sample_costs;
        d["wall_ms"] = out.wall_ms;
        return d;
      },
      py::arg("instance"), py::arg("solver") = "nn2opt", py::arg("model") = nullptr, py::arg("samples") = 64,
      py::arg("dg") = kEvalDg, py::arg("seed") = 0);

  mod.def(
      "validate",
      [](const MtspInstance& inst, std::vector<std::vector<int>> tours) {
        Solution sol;
        sol.tours = std::move(tours);
        for (const auto& t : sol.tours) {
          double len = 0.0;
          for (std::size_t k = 1; k < t.size(); ++k)
            if (t[k - 1] >= 0 && t[k - 1] < inst.n() && t[k] >= 0 && t[k] < inst.n()) len += inst.cost(t[k - 1], t[k]);
          sol.lengths.push_back(len);
          sol.minmax = std::max(sol.minmax, len);
        }
        std::vector<std::string> msgs;
        for (const auto& v : validate_solution(inst, sol)) msgs.push_back(v.message);
        return msgs;
      },
      py::arg("instance"), py::arg("tours"), "Violation messages; empty when the tours form a valid solution.");

  mod.def(
      "brute_force",
      [](const MtspInstance& inst) { return solution_dict(inst, brute_force_minmax(inst).second); },
      py::arg("instance"));

  mod.def(
      "render_svg",
      [](const MtspInstance& inst, std::vector<std::vector<int>> tours) {
        return render_svg(inst, make_solution(inst, std::move(tours)));
      },
      py::arg("instance"), py::arg("tours"));

  mod.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "dan");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the dan command line in-process; returns (exit_code, stdout, stderr).");
}
