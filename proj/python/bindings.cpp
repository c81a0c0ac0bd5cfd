#include "nrulesim/ensemble.hpp"
#include "nrulesim/oracle.hpp"
#include "nrulesim/reduction.hpp"
#include "nrulesim/scenario.hpp"

#include "json.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace nrulesim;

namespace {

// results cross into python as JSON text; the package turns them into dicts
std::string record_to_json(const TrajectoryRecord& rec, double tol, CollapsePolicy policy) {
    nlohmann::ordered_json root;
    root["scenario"] = rec.scenario;
    root["seed"] = rec.seed;
    root["tol"] = tol;
    root["policy"] = policy_name(policy);
    root["tEnd"] = rec.t_end;
    auto& events = root["events"] = nlohmann::ordered_json::array();
    for (const auto& e : rec.events) {
        nlohmann::ordered_json je;
        je["t"] = e.t_sc;
        je["chosen"] = e.chosen_label;
        je["lambda"] = e.lambda_at_hit;
        je["sBefore"] = e.s_before;
        je["sAfter"] = e.s_after;
        events.push_back(std::move(je));
    }
    root["signature"] = rec.signature();
    root["tagWatch"] = rec.tag_watch;
    if (!rec.samples.empty()) {
        auto& samples = root["samples"] = nlohmann::ordered_json::array();
        for (const auto& s : rec.samples) {
            nlohmann::ordered_json js;
            js["t"] = s.t;
            js["componentModulus"] = s.component_modulus;
            samples.push_back(std::move(js));
        }
    }
    return root.dump();
}

struct PyScenario {
    ScenarioSpec spec;
};

double resolved_t_max(const PyScenario& s, double t_max) {
    return t_max > 0.0 ? t_max : s.spec.meta.suggested_t_max;
}

} // namespace

PYBIND11_MODULE(_nrulesim, m) {
    m.doc() = "stochastic trajectory simulator core";
    m.attr("__version__") = "0.1.0";

    py::class_<PyScenario>(m, "Scenario")
        .def_property_readonly("id", [](const PyScenario& s) { return s.spec.id; })
        .def_property_readonly("dimension",
                               [](const PyScenario& s) { return s.spec.graph.dimension(); })
        .def_property_readonly("suggested_tmax",
                               [](const PyScenario& s) { return s.spec.meta.suggested_t_max; })
        .def("to_json", [](const PyScenario& s) { return graph_to_json(s.spec.graph); });

    m.def("registry_json", [] {
        nlohmann::ordered_json root = nlohmann::ordered_json::array();
        for (const auto& info : scenario_registry()) {
            nlohmann::ordered_json ji;
            ji["id"] = info.id;
            ji["summary"] = info.summary;
            auto& params = ji["params"] = nlohmann::ordered_json::array();
            for (const auto& p : info.params) {
                nlohmann::ordered_json jp;
                jp["name"] = p.name;
                jp["default"] = p.value;
                jp["doc"] = p.doc;
                params.push_back(std::move(jp));
            }
            root.push_back(std::move(ji));
        }
        return root.dump();
    });

    m.def(
        "build",
        [](const std::string& id, const std::map<std::string, double>& params) {
            return PyScenario{build_scenario(id, params)};
        },
        py::arg("id"), py::arg("params") = std::map<std::string, double>{});

    m.def("loads", [](const std::string& text, const std::string& name) {
        PyScenario s;
        s.spec.id = name;
        s.spec.graph = graph_from_json(text);
        double min_gap = 0.0;
        for (const auto& c : s.spec.graph.couplings)
            if (c.kind == CouplingKind::Gap && std::abs(c.value) > 0.0)
                min_gap = min_gap == 0.0 ? std::abs(c.value) : std::min(min_gap, std::abs(c.value));
        s.spec.meta.suggested_t_max = min_gap > 0.0 ? 3.0e4 / min_gap : 50.0;
        return s;
    }, py::arg("text"), py::arg("name") = "file");

    m.def("validate", [](const PyScenario& s) {
        ValidationReport report = validate(s.spec.graph);
        nlohmann::ordered_json root = nlohmann::ordered_json::array();
        for (const auto& v : report.violations) {
            nlohmann::ordered_json jv;
            jv["kind"] = v.kind;
            jv["detail"] = v.detail;
            root.push_back(std::move(jv));
        }
        return root.dump();
    });

    m.def(
        "run",
        [](const PyScenario& s, std::uint64_t seed, double t_max, const std::string& policy,
           double tol, double samples) {
            TrajectoryOptions opts;
            opts.t_max = resolved_t_max(s, t_max);
            opts.policy = policy_from_name(policy);
            opts.integrator.tol = tol;
            opts.integrator.quad_tol = tol;
            opts.sample_every = samples;
            opts.watch_tags = s.spec.meta.pre_hit_zero_tags;
            PhiloxStream rng(seed, 0);
            TrajectoryRecord rec = run_trajectory(s.spec.graph, rng, opts);
            rec.scenario = s.spec.id;
            rec.seed = seed;
            return record_to_json(rec, tol, opts.policy);
        },
        py::arg("scenario"), py::arg("seed") = 1, py::arg("tmax") = 0.0,
        py::arg("policy") = "zero", py::arg("tol") = 1e-9, py::arg("samples") = 0.0,
        py::call_guard<py::gil_scoped_release>());

    m.def(
        "ensemble",
        [](const PyScenario& s, long trials, std::uint64_t seed, int workers, double t_max,
           const std::string& policy, double tol, bool compare, int oracle_steps) {
            EnsembleOptions opts;
            opts.trials = trials;
            opts.master_seed = seed;
            opts.workers = workers;
            opts.t_max = resolved_t_max(s, t_max);
            opts.policy = policy_from_name(policy);
            opts.integrator.tol = tol;
            opts.integrator.quad_tol = tol;
            OutcomeStats stats = run_ensemble(s.spec, opts);
            if (compare) {
                auto seq = oracle::sequence_probabilities(s.spec.graph, stats.t_max, oracle_steps);
                compare_to_oracle(stats, seq.probabilities);
            }
            return stats_to_json(stats);
        },
        py::arg("scenario"), py::arg("trials"), py::arg("seed") = 1, py::arg("workers") = 0,
        py::arg("tmax") = 0.0, py::arg("policy") = "zero", py::arg("tol") = 1e-9,
        py::arg("compare") = true, py::arg("oracle_steps") = 1 << 14,
        py::call_guard<py::gil_scoped_release>());

    m.def(
        "race",
        [](const PyScenario& s, double t_max, int steps) {
            const double horizon = resolved_t_max(s, t_max);
            auto first = oracle::race_quadrature(s.spec.graph, horizon, steps);
            auto seq = oracle::sequence_probabilities(s.spec.graph, horizon, steps);
            nlohmann::ordered_json root;
            root["tmax"] = horizon;
            root["firstStage"]["probabilities"] = first.probabilities;
            root["firstStage"]["noHit"] = first.no_hit;
            root["sequences"] = seq.probabilities;
            root["errorEstimate"] = std::max(first.error_estimate, seq.error_estimate);
            return root.dump();
        },
        py::arg("scenario"), py::arg("tmax") = 0.0, py::arg("steps") = 1 << 14,
        py::call_guard<py::gil_scoped_release>());

    m.def(
        "unitary",
        [](const PyScenario& s, double t) {
            auto amp = oracle::unitary_evolve(s.spec.graph, t);
            nlohmann::ordered_json root;
            root["t"] = t;
            double norm = 0.0;
            nlohmann::ordered_json comp;
            for (const auto& c : s.spec.graph.components) {
                double modulus = 0.0;
                for (int b : c.members) modulus += std::norm(amp[b]);
                comp[c.label] = modulus;
            }
            std::map<std::string, double> tags;
            for (const auto& b : s.spec.graph.basis) {
                norm += std::norm(amp[b.index]);
                for (const auto& tag : b.tags) tags[tag] += std::norm(amp[b.index]);
            }
            root["componentModulus"] = std::move(comp);
            root["tagModulus"] = tags;
            root["norm"] = norm;
            return root.dump();
        },
        py::arg("scenario"), py::arg("t"), py::call_guard<py::gil_scoped_release>());
}
