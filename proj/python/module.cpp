#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "compofun/experiments.hpp"
#include "compofun/features.hpp"
#include "compofun/io.hpp"
#include "compofun/ode.hpp"
#include "compofun/shallow.hpp"

namespace py = pybind11;
using namespace cf;

PYBIND11_MODULE(_compofun, m) {
  m.doc() = "compositional function networks: layered DAGs, feature extraction, "
            "network fitting, flows, optimal control";

  // translators run newest-first, so the base class goes first
  py::register_exception<Error>(m, "CompofunError");
  py::register_exception<SchemaError>(m, "SchemaError");
  py::register_exception<DomainError>(m, "DomainError");
  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<MergeBlockedError>(m, "MergeBlockedError");
  py::register_exception<ContractionError>(m, "ContractionError");
  py::register_exception<InvarianceError>(m, "InvarianceError");

  py::class_<CompositionalFunction>(m, "Function")
      .def_property_readonly("d", &CompositionalFunction::d)
      .def_property_readonly("q", &CompositionalFunction::q)
      .def_property_readonly("R", &CompositionalFunction::R)
      .def_property_readonly("l_max", &CompositionalFunction::l_max)
      .def_property_readonly("n_nodes",
                             [](const CompositionalFunction& f) { return f.nodes().size(); })
      .def_property_readonly("node_ids",
                             [](const CompositionalFunction& f) {
                               std::vector<std::string> ids;
                               for (const auto& n : f.nodes()) ids.push_back(n.id);
                               return ids;
                             })
      .def("__call__", &CompositionalFunction::evaluate, py::arg("x"))
      .def("evaluate", &CompositionalFunction::evaluate, py::arg("x"))
      .def("evaluate_unchecked", &CompositionalFunction::evaluate_unchecked, py::arg("x"))
      .def("to_json", [](const CompositionalFunction& f) { return dag_to_json(f); })
      .def_static("from_json", &parse_dag, py::arg("text"));

  m.def(
      "validate",
      [](const CompositionalFunction& f, int samples, uint64_t seed) {
        auto rep = validate(f, samples, seed);
        std::vector<std::pair<std::string, std::string>> issues;
        for (const auto& i : rep.issues) issues.emplace_back(i.category, i.message);
        return std::make_pair(rep.pass, issues);
      },
      py::arg("f"), py::arg("samples") = 4096, py::arg("seed") = 0);

  m.def("load", &load_dag, py::arg("path"));
  m.def("save", &save_dag, py::arg("f"), py::arg("path"));

  m.def(
      "features",
      [](const CompositionalFunction& f, double p) {
        auto ft = extract_features(f, p);
        py::dict d;
        d["empty"] = ft.empty;
        d["r_max"] = ft.r_max;
        d["Lambda"] = ft.Lambda;
        d["L_max"] = ft.L_max;
        d["n_general"] = ft.n_general;
        py::list per;
        for (const auto& pf : ft.per_node) {
          py::dict e;
          e["id"] = pf.id;
          e["d_ij"] = pf.d_ij;
          e["m_ij"] = pf.m_ij;
          e["R_ij"] = pf.R_ij;
          e["L_ij"] = pf.L_ij;
          e["sobolev"] = pf.sobolev;
          per.append(e);
        }
        d["per_node"] = per;
        return d;
      },
      py::arg("f"), py::arg("p") = kInf);

  m.def(
      "propagate_errors",
      [](const CompositionalFunction& f, const std::map<std::string, double>& errs, double p) {
        return propagate_errors(f, errs, p);
      },
      py::arg("f"), py::arg("node_errors"), py::arg("p") = kInf);

  m.def("linear_combine", &linear_combine, py::arg("f1"), py::arg("f2"), py::arg("a"),
        py::arg("b"));
  m.def("inner_product", &inner_product, py::arg("f1"), py::arg("f2"));
  m.def("divide", &divide, py::arg("f1"), py::arg("f2"));
  m.def("compose", &compose, py::arg("g"), py::arg("f"), py::arg("check_samples") = 256);
  m.def("stack", &stack, py::arg("f1"), py::arg("f2"));
  m.def("insert_identity_nodes", &insert_identity_nodes, py::arg("f"));
  m.def("merge_linear_nodes", &merge_linear_nodes, py::arg("f"));
  m.def("is_neural_network", &is_neural_network, py::arg("f"));
  m.def("neuron_count", &neuron_count, py::arg("f"));

  m.def(
      "fit_assemble",
      [](const CompositionalFunction& f, int width, uint64_t seed) {
        FitCfg cfg;
        cfg.seed = seed;
        std::map<std::string, ShallowNet> nets;
        std::map<std::string, double> errs;
        for (const auto& n : f.nodes()) {
          if (n.kind != NodeKind::general) continue;
          auto [net, err] = fit_shallow(n, width, cfg);
          nets[n.id] = std::move(net);
          errs[n.id] = err;
        }
        return std::make_pair(assemble_deep(f, nets), errs);
      },
      py::arg("f"), py::arg("width"), py::arg("seed") = 1,
      "Fit a shallow network to every general node and substitute them in; "
      "returns (assembled, per-node sup errors).");

  m.def("make_lorenz96", &make_lorenz96, py::arg("d"), py::arg("F"), py::arg("R"));
  m.def("euler_step", &euler_step, py::arg("f"), py::arg("h"));
  m.def("euler_flow", &euler_flow, py::arg("f"), py::arg("T"), py::arg("K"));

  m.def(
      "run_experiment",
      [](const std::string& config_text, uint64_t seed) {
        auto rep = run_experiment(config_text);
        return py::make_tuple(rep.exit_code, rep.csv, rep.summary_json(seed, config_text));
      },
      py::arg("config_json"), py::arg("seed") = 1,
      "Run an experiment described by a JSON config; returns (exit_code, csv, summary_json).");
}
