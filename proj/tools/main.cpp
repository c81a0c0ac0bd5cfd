#include "nrulesim/ensemble.hpp"
#include "nrulesim/oracle.hpp"
#include "nrulesim/reduction.hpp"
#include "nrulesim/scenario.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace nrulesim;

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitComparison = 4;

std::map<std::string, double> parse_params(const std::vector<std::string>& kv) {
    std::map<std::string, double> params;
    for (const auto& item : kv) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--param expects name=value, got '" + item + "'");
        try {
            params[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--param value in '" + item + "' is not a number");
        }
    }
    return params;
}

bool is_registered(const std::string& ref) {
    for (const auto& info : scenario_registry())
        if (info.id == ref) return true;
    return false;
}

// a scenario reference is either a registry id or a file path
ScenarioSpec resolve_scenario(const std::string& ref, const std::map<std::string, double>& params) {
    if (is_registered(ref)) return build_scenario(ref, params);
    std::ifstream in(ref);
    if (!in) throw std::invalid_argument("'" + ref + "' is neither a scenario id nor a readable file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    ScenarioSpec spec;
    spec.id = ref;
    spec.graph = graph_from_json(buffer.str());
    double min_gap = 0.0;
    for (const auto& c : spec.graph.couplings)
        if (c.kind == CouplingKind::Gap && std::abs(c.value) > 0.0)
            min_gap = min_gap == 0.0 ? std::abs(c.value) : std::min(min_gap, std::abs(c.value));
    spec.meta.suggested_t_max = min_gap > 0.0 ? 3.0e4 / min_gap : 50.0;
    return spec;
}

void write_or_print(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write to '" + path + "'");
    out << text;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic trajectory simulator for gap-coupled component networks"};
    app.require_subcommand(1);

    std::string scenario_ref, out_path, report_path, csv_path, policy_name_arg = "zero";
    std::string oracle_mode = "race";
    std::vector<std::string> param_args;
    std::uint64_t seed = 1;
    long trials = 100000;
    int workers = 0;
    int oracle_steps = 1 << 14;
    double t_max = 0.0, samples = 0.0;
    IntegratorOptions integ;
    bool assert_pass = false;

    auto add_numerics = [&](CLI::App* cmd) {
        cmd->add_option("--tol", integ.tol, "integrator error per unit time");
        cmd->add_option("--dt-init", integ.dt_init, "initial step size");
        cmd->add_option("--dt-floor", integ.dt_floor, "smallest allowed step");
    };
    double hist_bin = 0.25;

    auto* validate_cmd = app.add_subcommand("validate", "check a scenario file");
    validate_cmd->add_option("scenario", scenario_ref, "scenario file (or id)")->required();

    auto* run_cmd = app.add_subcommand("run", "run one trajectory, event log to stdout");
    run_cmd->add_option("scenario", scenario_ref, "scenario id or file")->required();
    run_cmd->add_option("--seed", seed, "trajectory stream seed");
    run_cmd->add_option("--tmax", t_max, "time horizon (default per scenario)");
    run_cmd->add_option("--policy", policy_name_arg, "zero|phantom")
        ->check(CLI::IsMember({"zero", "phantom"}));
    run_cmd->add_option("--samples", samples, "sample component populations every DT");
    run_cmd->add_option("--out", out_path, "write the log here instead of stdout");
    run_cmd->add_option("--param", param_args, "scenario parameter name=value");
    add_numerics(run_cmd);

    auto* ens_cmd = app.add_subcommand("ensemble", "run many trajectories and aggregate");
    ens_cmd->add_option("scenario", scenario_ref, "scenario id or file")->required();
    ens_cmd->add_option("--trials", trials, "number of trajectories")->required();
    ens_cmd->add_option("--seed", seed, "master seed");
    ens_cmd->add_option("--workers", workers, "worker threads (NRULE_SIM_THREADS overrides)");
    ens_cmd->add_option("--tmax", t_max, "time horizon (default per scenario)");
    ens_cmd->add_option("--policy", policy_name_arg, "zero|phantom")
        ->check(CLI::IsMember({"zero", "phantom"}));
    ens_cmd->add_option("--report", report_path, "write the JSON report here");
    ens_cmd->add_option("--csv", csv_path, "write outcome counts as CSV");
    ens_cmd->add_option("--param", param_args, "scenario parameter name=value");
    ens_cmd->add_option("--hist-bin", hist_bin, "hit-time histogram bin width");
    ens_cmd->add_flag("--assert", assert_pass,
                      "exit 4 unless invariants hold and the oracle comparison passes");
    add_numerics(ens_cmd);

    auto* oracle_cmd = app.add_subcommand("oracle", "independent reference probabilities");
    oracle_cmd->add_option("scenario", scenario_ref, "scenario id or file")->required();
    oracle_cmd->add_option("--mode", oracle_mode, "race|unitary")
        ->check(CLI::IsMember({"race", "unitary"}));
    oracle_cmd->add_option("--tmax", t_max, "horizon (race) or evolution time (unitary)");
    oracle_cmd->add_option("--steps", oracle_steps, "quadrature grid steps");
    oracle_cmd->add_option("--param", param_args, "scenario parameter name=value");

    auto* emit_cmd = app.add_subcommand("emit", "write a built-in scenario as a file");
    emit_cmd->add_option("scenario", scenario_ref, "scenario id")->required();
    emit_cmd->add_option("--param", param_args, "scenario parameter name=value");
    emit_cmd->add_option("--out", out_path, "destination (default stdout)");

    auto* list_cmd = app.add_subcommand("list-scenarios", "scenario ids and parameters");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (list_cmd->parsed()) {
            for (const auto& info : scenario_registry()) {
                std::cout << info.id << " - " << info.summary << "\n";
                for (const auto& p : info.params)
                    std::cout << "    " << p.name << " = " << p.value << "  (" << p.doc << ")\n";
            }
            return 0;
        }

        integ.quad_tol = integ.tol;
        const auto params = parse_params(param_args);
        ScenarioSpec spec = resolve_scenario(scenario_ref, params);

        if (emit_cmd->parsed()) {
            write_or_print(graph_to_json(spec.graph), out_path);
            return 0;
        }

        ValidationReport report = validate(spec.graph);
        if (validate_cmd->parsed()) {
            std::cout << report.to_string();
            if (report.ok()) std::cout << "\n";
            return report.ok() ? 0 : kExitValidation;
        }
        if (!report.ok()) {
            std::cerr << "scenario does not validate:\n" << report.to_string() << "\n";
            return kExitValidation;
        }

        const double horizon = t_max > 0.0 ? t_max : spec.meta.suggested_t_max;

        if (run_cmd->parsed()) {
            TrajectoryOptions opts;
            opts.t_max = horizon;
            opts.policy = policy_from_name(policy_name_arg);
            opts.sample_every = samples;
            opts.integrator = integ;
            opts.watch_tags = spec.meta.pre_hit_zero_tags;
            PhiloxStream rng(seed, 0);
            TrajectoryRecord rec = run_trajectory(spec.graph, rng, opts);
            rec.scenario = spec.id;
            rec.seed = seed;
            std::string log = event_log(rec, integ.tol, opts.policy);
            if (samples > 0.0) {
                for (const auto& s : rec.samples) {
                    nlohmann::ordered_json line;
                    line["sample"] = s.t;
                    line["componentModulus"] = s.component_modulus;
                    log += line.dump();
                    log.push_back('\n');
                }
            }
            write_or_print(log, out_path);
            return 0;
        }

        if (ens_cmd->parsed()) {
            EnsembleOptions opts;
            opts.trials = trials;
            opts.master_seed = seed;
            opts.workers = workers;
            opts.t_max = horizon;
            opts.policy = policy_from_name(policy_name_arg);
            opts.integrator = integ;
            opts.histogram_bin = hist_bin;
            OutcomeStats stats = run_ensemble(spec, opts);

            auto seq = oracle::sequence_probabilities(spec.graph, stats.t_max, oracle_steps);
            compare_to_oracle(stats, seq.probabilities);

            const std::string json = stats_to_json(stats);
            if (!report_path.empty()) write_or_print(json, report_path);
            if (!csv_path.empty()) write_or_print(stats_to_csv(stats), csv_path);
            if (report_path.empty()) std::cout << json;

            if (assert_pass && (!stats.invariant_failures.empty() || !stats.comparison.pass)) {
                std::cerr << "ensemble assertion failed: " << stats.invariant_failures.size()
                          << " invariant failures, oracle comparison "
                          << (stats.comparison.pass ? "passed" : "failed") << "\n";
                return kExitComparison;
            }
            return 0;
        }

        if (oracle_cmd->parsed()) {
            nlohmann::ordered_json out;
            if (oracle_mode == "race") {
                auto first = oracle::race_quadrature(spec.graph, horizon, oracle_steps);
                auto seq = oracle::sequence_probabilities(spec.graph, horizon, oracle_steps);
                out["mode"] = "race";
                out["tmax"] = horizon;
                out["firstStage"]["probabilities"] = first.probabilities;
                out["firstStage"]["noHit"] = first.no_hit;
                out["sequences"] = seq.probabilities;
                out["errorEstimate"] = std::max(first.error_estimate, seq.error_estimate);
            } else {
                const double t = t_max > 0.0 ? t_max : 1.0;
                auto amp = oracle::unitary_evolve(spec.graph, t);
                out["mode"] = "unitary";
                out["t"] = t;
                double norm = 0.0;
                nlohmann::ordered_json comp;
                for (const auto& c : spec.graph.components) {
                    double m = 0.0;
                    for (int b : c.members) m += std::norm(amp[b]);
                    comp[c.label] = m;
                }
                std::map<std::string, double> tag_pop;
                for (const auto& b : spec.graph.basis) {
                    norm += std::norm(amp[b.index]);
                    for (const auto& tag : b.tags) tag_pop[tag] += std::norm(amp[b.index]);
                }
                out["componentModulus"] = std::move(comp);
                out["tagModulus"] = tag_pop;
                out["norm"] = norm;
            }
            std::cout << out.dump(2) << "\n";
            return 0;
        }
    } catch (const IntegratorError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const DegenerateStateError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const oracle::OracleError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const ScenarioFormatError& e) {
        std::cerr << "scenario format error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return 0;
}
