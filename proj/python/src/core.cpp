#include <functional>
#include <string>
#include <utility>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "parakkt/config.hpp"
#include "parakkt/error.hpp"
#include "parakkt/io.hpp"
#include "parakkt/kkt.hpp"
#include "parakkt/optimize.hpp"
#include "parakkt/regularity.hpp"
#include "parakkt/soc.hpp"

namespace py = pybind11;
using namespace parakkt;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Fields cross the boundary as (num_levels, num_nodes) arrays; row n is level n.
Array to_array(const Field& f, const Mesh& m) {
  Array a({m.num_levels(), m.num_nodes()});
  std::copy(f.values().data(), f.values().data() + f.values().size(), a.mutable_data());
  return a;
}

Field from_array(const Array& a, const Mesh& m) {
  if (a.ndim() != 2 || a.shape(0) != m.num_levels() || a.shape(1) != m.num_nodes()) {
    throw InvalidArgument("expected an array of shape (" + std::to_string(m.num_levels()) + ", " +
                          std::to_string(m.num_nodes()) + ")");
  }
  Field f = Field::zeros(m);
  std::copy(a.data(), a.data() + a.size(), f.values().data());
  return f;
}

py::object to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

// A solved or certified point with everything the later stages need.
struct Run {
  RunConfig config;
  ProblemSpec spec;
  EllipticOperator op;
  Solution sol;

  const Mesh& mesh() const { return op.mesh(); }
};

Run make_run(const RunConfig& cfg, const std::function<Solution(const ProblemSpec&, const EllipticOperator&)>& fn) {
  ProblemSpec spec = cfg.build_problem();
  EllipticOperator op = assemble_elliptic(cfg.build_mesh(), spec.diffusion);
  Solution sol;
  {
    py::gil_scoped_release release;
    sol = fn(spec, op);
  }
  return {cfg, std::move(spec), std::move(op), std::move(sol)};
}

nlohmann::json holder_json(const HolderEstimate& h) {
  nlohmann::json j = h.to_json();
  nlohmann::json bins = nlohmann::json::array();
  for (const HolderBin& b : h.bins) {
    bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"at_distance", b.at_distance},
                    {"max_increment", b.max_increment}, {"pairs", b.pairs}});
  }
  j["bins"] = bins;
  return j;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Solver and verification toolkit for parabolic optimal control with box and mixed constraints.";

  // Translators run newest first, so the specific types are registered last.
  auto& error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

  py::class_<Mesh>(m, "Mesh")
      .def_static("build_1d", &Mesh::build_1d, py::arg("lx"), py::arg("nx"), py::arg("T"), py::arg("nt"))
      .def_static("build_2d", &Mesh::build_2d, py::arg("lx"), py::arg("ly"), py::arg("nx"),
                  py::arg("ny"), py::arg("T"), py::arg("nt"))
      .def_property_readonly("dim", &Mesh::dim)
      .def_property_readonly("nx", &Mesh::nx)
      .def_property_readonly("ny", &Mesh::ny)
      .def_property_readonly("nt", &Mesh::nt)
      .def_property_readonly("T", &Mesh::T)
      .def_property_readonly("hx", &Mesh::hx)
      .def_property_readonly("dt", &Mesh::dt)
      .def_property_readonly("num_nodes", &Mesh::num_nodes)
      .def_property_readonly("num_levels", &Mesh::num_levels)
      .def("coords", [](const Mesh& mesh) {
        Array a({mesh.num_nodes(), mesh.dim()});
        auto r = a.mutable_unchecked<2>();
        for (int k = 0; k < mesh.num_nodes(); ++k) {
          const auto x = mesh.coords(k);
          for (int d = 0; d < mesh.dim(); ++d) r(k, d) = x[static_cast<std::size_t>(d)];
        }
        return a;
      }, "Interior node coordinates, shape (num_nodes, dim).")
      .def("times", [](const Mesh& mesh) {
        Array a(mesh.num_levels());
        for (int n = 0; n < mesh.num_levels(); ++n) a.mutable_at(n) = mesh.time(n);
        return a;
      })
      .def("__repr__", &Mesh::describe);

  py::class_<RunConfig>(m, "Config")
      .def_static("parse", &RunConfig::parse, py::arg("text"))
      .def_static("load", &RunConfig::load, py::arg("path"))
      .def("with_override", &RunConfig::with_override, py::arg("key"), py::arg("value"),
           "Copy with one 'section.key' replaced; 'mesh.n' sets nx and ny.")
      .def("with_seed", &RunConfig::with_seed, py::arg("seed"))
      .def("mesh", &RunConfig::build_mesh)
      .def_property_readonly("problem", [](const RunConfig& c) { return c.problem.name; })
      .def_property_readonly("seed", [](const RunConfig& c) { return c.verification.seed; })
      .def_property_readonly("text", [](const RunConfig& c) { return c.source.to_string(); });

  py::class_<Run>(m, "Run")
      .def_property_readonly("mesh", &Run::mesh)
      .def_property_readonly("config", [](const Run& r) { return r.config; })
      .def_property_readonly("u", [](const Run& r) { return to_array(r.sol.u, r.mesh()); })
      .def_property_readonly("y", [](const Run& r) { return to_array(r.sol.y, r.mesh()); })
      .def_property_readonly("phi", [](const Run& r) { return to_array(r.sol.phi, r.mesh()); })
      .def_property_readonly("e", [](const Run& r) { return to_array(r.sol.e, r.mesh()); })
      .def_property_readonly("ehat", [](const Run& r) { return to_array(r.sol.ehat, r.mesh()); })
      .def_property_readonly("J", [](const Run& r) { return r.sol.J; })
      .def_property_readonly("certified", [](const Run& r) { return r.sol.certified; })
      .def_property_readonly("status", [](const Run& r) { return r.sol.status; })
      .def_property_readonly("outer_iterations", [](const Run& r) { return r.sol.outer_iterations; })
      .def("kkt", [](const Run& r) { return to_py(r.sol.kkt.to_json()); })
      .def("separation", [](const Run& r) {
        const SeparationMargins s = check_separation(r.spec, r.mesh(), r.sol.y, r.sol.u, &r.sol.sets.mask_b);
        return py::dict(py::arg("gamma") = s.gamma, py::arg("gamma_b") = s.gamma_b);
      })
      .def("save", [](const Run& r, const std::string& dir) { write_solution_fields(dir, r.mesh(), r.sol); },
           py::arg("dir"), "Write the field CSVs and history.csv into an existing directory.");

  m.def("solve", [](const RunConfig& cfg) {
    return make_run(cfg, [&](const ProblemSpec& spec, const EllipticOperator& op) {
      return solve_augmented_lagrangian(spec, op, default_initial_control(spec, op.mesh()), cfg.optimizer);
    });
  }, py::arg("config"), "Augmented Lagrangian solve of the configured problem.");

  m.def("certify", [](const RunConfig& cfg, const Array& u) {
    const Field control = from_array(u, cfg.build_mesh());
    return make_run(cfg, [&](const ProblemSpec& spec, const EllipticOperator& op) {
      return certify_control(spec, op, control, cfg.verification.kkt_tol, cfg.verification.tol_act,
                             cfg.optimizer.pde);
    });
  }, py::arg("config"), py::arg("u"), "State, adjoint and multipliers for a given control, with KKT residuals.");

  m.def("robinson", [](const Run& r, double rho) {
    return to_py(verify_robinson(r.spec, r.op, r.sol.y, r.sol.u, rho, r.config.verification.tol_act,
                                 r.config.optimizer.pde).to_json());
  }, py::arg("run"), py::arg("rho"));

  m.def("second_order", [](const Run& r) {
    const VerificationConfig& v = r.config.verification;
    const SocOptions opt = r.config.soc_options();
    nlohmann::json j;
    {
      py::gil_scoped_release release;
      const SOCReport soc = min_rayleigh(r.spec, r.op, r.sol, v.soc_samples, v.seed, opt);
      const GrowthReport growth = growth_test(r.spec, r.op, r.sol, v.growth_samples, v.growth_radii, v.seed + 1, opt);
      j["soc"] = soc.to_json();
      j["soc"]["values"] = soc.values;
      j["growth"] = growth.to_json();
    }
    return to_py(j);
  }, py::arg("run"), "Sampled second-order form on the critical cone and the quadratic growth probe.");

  m.def("regularity", [](const Run& r) {
    nlohmann::json j;
    {
      py::gil_scoped_release release;
      const RegularityReport rep = regularity_report(r.mesh(), r.sol.y, r.sol.u, r.sol.phi, r.sol.e,
                                                     r.sol.ehat, r.sol.sets, r.config.holder_options());
      j = rep.to_json();
      j["maximum_principle"] = maximum_principle_check(r.spec, r.op, r.sol.y, r.sol.u).to_json();
    }
    return to_py(j);
  }, py::arg("run"), "Hoelder exponents of the fields and the discrete maximum principle.");

  m.def("holder_estimate", [](const Array& values, const Mesh& mesh, long n_pairs, std::uint64_t seed,
                              bool parabolic, double min_distance, double max_distance, double bin_ratio) {
    HolderOptions opt;
    opt.n_pairs = n_pairs;
    opt.seed = seed;
    opt.parabolic = parabolic;
    opt.min_distance = min_distance;
    opt.max_distance = max_distance;
    opt.bin_ratio = bin_ratio;
    return to_py(holder_json(holder_estimate(from_array(values, mesh), mesh, opt)));
  }, py::arg("values"), py::arg("mesh"), py::arg("n_pairs") = HolderOptions{}.n_pairs,
     py::arg("seed") = 1, py::arg("parabolic") = true, py::arg("min_distance") = 0.0,
     py::arg("max_distance") = 0.0, py::arg("bin_ratio") = HolderOptions{}.bin_ratio);
}
