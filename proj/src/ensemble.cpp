#include "nrulesim/ensemble.hpp"

#include "nrulesim/oracle.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace nrulesim {

int resolve_workers(int requested) {
    if (const char* env = std::getenv("NRULE_SIM_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

std::vector<InvariantFailure> check_invariants(const std::vector<TrajectoryRecord>& records,
                                               const SystemGraph& graph, const ScenarioMeta& meta) {
    std::vector<InvariantFailure> failures;
    auto fail = [&](long trial, const std::string& kind, const std::string& detail) {
        failures.push_back({trial, kind, detail});
    };

    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        const long trial = static_cast<long>(r);
        const auto sig = rec.signature();

        const int n_events = static_cast<int>(sig.size());
        if (n_events < meta.min_events || n_events > meta.max_events)
            fail(trial, "event-count",
                 std::to_string(n_events) + " events, expected [" + std::to_string(meta.min_events) +
                     "," + std::to_string(meta.max_events) + "]");

        for (std::size_t i = 1; i < rec.events.size(); ++i)
            if (!(rec.events[i].t_sc > rec.events[i - 1].t_sc))
                fail(trial, "time-order", "event times do not strictly increase");

        if (!meta.allowed_sequences.empty() && !sig.empty()) {
            const bool ok = std::any_of(
                meta.allowed_sequences.begin(), meta.allowed_sequences.end(),
                [&](const std::vector<std::string>& allowed) {
                    if (sig.size() > allowed.size()) return false;
                    return std::equal(sig.begin(), sig.end(), allowed.begin());
                });
            if (!ok) fail(trial, "sequence-order", "hit sequence " + oracle::sequence_key(sig));
        }

        for (const auto& tag : meta.pre_hit_zero_tags) {
            auto it = rec.tag_watch.find(tag);
            if (it != rec.tag_watch.end() && it->second != 0.0)
                fail(trial, "pre-hit-population",
                     "tag " + tag + " reached " + std::to_string(it->second) + " before the first hit");
        }

        if (!meta.support_tag_prefix.empty()) {
            // every supported basis state must share one tag with the prefix
            std::set<std::string> common;
            bool first = true;
            bool confined = true;
            for (int idx : rec.terminal_support) {
                std::set<std::string> mine;
                for (const auto& t : graph.basis[idx].tags)
                    if (t.rfind(meta.support_tag_prefix, 0) == 0) mine.insert(t);
                if (first) {
                    common = std::move(mine);
                    first = false;
                } else {
                    std::set<std::string> inter;
                    std::set_intersection(common.begin(), common.end(), mine.begin(), mine.end(),
                                          std::inserter(inter, inter.begin()));
                    common = std::move(inter);
                }
                if (common.empty()) {
                    confined = false;
                    break;
                }
            }
            if (!confined || first)
                fail(trial, "support-not-confined",
                     first ? "terminal support is empty"
                           : "terminal support spans several " + meta.support_tag_prefix + " tags");
        }
    }
    return failures;
}

OutcomeStats run_ensemble(const ScenarioSpec& scenario, const EnsembleOptions& opts) {
    if (opts.trials < 1) throw std::invalid_argument("ensemble needs at least one trial");

    TrajectoryOptions traj;
    traj.t_max = opts.t_max > 0.0 ? opts.t_max : scenario.meta.suggested_t_max;
    traj.policy = opts.policy;
    traj.integrator = opts.integrator;
    traj.watch_tags = scenario.meta.pre_hit_zero_tags;

    std::vector<TrajectoryRecord> records(opts.trials);
    const int workers = std::min<long>(resolve_workers(opts.workers), opts.trials);

    std::vector<std::thread> pool;
    std::vector<std::string> errors(workers);
    auto work = [&](int w) {
        long current = -1;
        try {
            for (long i = w; i < opts.trials; i += workers) {
                current = i;
                const std::uint64_t stream = static_cast<std::uint64_t>(opts.first_trial + i);
                PhiloxStream rng(opts.master_seed, stream);
                records[i] = run_trajectory(scenario.graph, rng, traj);
                records[i].scenario = scenario.id;
                records[i].seed = stream;
            }
        } catch (const std::exception& e) {
            errors[w] = "trial " + std::to_string(opts.first_trial + current) + ": " + e.what();
        }
    };
    if (workers <= 1) {
        work(0);
    } else {
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (!e.empty()) throw std::runtime_error("trajectory failed: " + e);

    OutcomeStats stats;
    stats.scenario = scenario.id;
    stats.trials = opts.trials;
    stats.master_seed = opts.master_seed;
    stats.t_max = traj.t_max;
    stats.policy = opts.policy;
    stats.tol = opts.integrator.tol;

    int max_events = 0;
    for (const auto& rec : records)
        max_events = std::max(max_events, static_cast<int>(rec.events.size()));
    stats.hit_time_histograms.resize(max_events);
    for (int s = 0; s < max_events; ++s) {
        auto& h = stats.hit_time_histograms[s];
        h.slot = s;
        h.bin_width = opts.histogram_bin;
        h.bins.assign(opts.histogram_max_bins, 0);
    }

    for (const auto& rec : records) {
        stats.outcome_counts[oracle::sequence_key(rec.signature())] += 1;
        for (int s = 0; s < max_events; ++s) {
            auto& h = stats.hit_time_histograms[s];
            if (s >= static_cast<int>(rec.events.size())) {
                h.missing += 1;
                continue;
            }
            const long bin = static_cast<long>(rec.events[s].t_sc / h.bin_width);
            if (bin >= static_cast<long>(h.bins.size()))
                h.overflow += 1;
            else
                h.bins[bin] += 1;
        }
    }

    stats.invariant_failures = check_invariants(records, scenario.graph, scenario.meta);
    if (opts.keep_records) stats.records = std::move(records);
    return stats;
}

namespace {

// regularized incomplete gamma Q(a, x), series / continued fraction split
double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q domain");
    if (x == 0.0) return 1.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        // P(a,x) by series, return 1 - P
        double term = 1.0 / a;
        double sum = term;
        double ap = a;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-15) break;
        }
        const double p = sum * std::exp(-x + a * std::log(x) - lg);
        return 1.0 - p;
    }
    // Lentz continued fraction for Q
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - lg) * h;
}

} // namespace

double chi_square_p_value(double chi_square, int dof) {
    if (dof <= 0) return 1.0;
    return gamma_q(0.5 * dof, 0.5 * chi_square);
}

void compare_to_oracle(OutcomeStats& stats, const std::map<std::string, double>& oracle_probs,
                       double significance) {
    auto& cmp = stats.comparison;
    cmp = OracleComparison{};
    cmp.compared = true;
    cmp.oracle_p = oracle_probs;

    const double n = static_cast<double>(stats.trials);
    std::set<std::string> keys;
    for (const auto& [k, c] : stats.outcome_counts) keys.insert(k);
    for (const auto& [k, p] : oracle_probs) keys.insert(k);

    bool uncovered = false;
    double pooled_obs = 0.0, pooled_exp = 0.0;
    double chi2 = 0.0;
    int bins = 0;
    for (const auto& k : keys) {
        const auto itc = stats.outcome_counts.find(k);
        const double obs = itc == stats.outcome_counts.end() ? 0.0 : static_cast<double>(itc->second);
        const auto itp = oracle_probs.find(k);
        const double p = itp == oracle_probs.end() ? 0.0 : itp->second;
        const double expd = n * p;

        if (p > 0.0 && p < 1.0)
            cmp.z[k] = (obs - expd) / std::sqrt(n * p * (1.0 - p));
        if (p == 0.0 && obs > 0.0) uncovered = true;

        if (expd < 5.0) {
            pooled_obs += obs;
            pooled_exp += expd;
        } else {
            chi2 += (obs - expd) * (obs - expd) / expd;
            ++bins;
        }
    }
    if (pooled_exp > 0.0) {
        chi2 += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
        ++bins;
    }
    cmp.chi_square = chi2;
    cmp.dof = std::max(bins - 1, 1);
    cmp.p_value = uncovered ? 0.0 : chi_square_p_value(chi2, cmp.dof);
    cmp.pass = !uncovered && cmp.p_value > significance;
}

std::string stats_to_json(const OutcomeStats& stats) {
    nlohmann::ordered_json root;
    root["scenario"] = stats.scenario;
    root["trials"] = stats.trials;
    root["seed"] = stats.master_seed;
    root["tmax"] = stats.t_max;
    root["policy"] = policy_name(stats.policy);
    root["tol"] = stats.tol;

    auto& outcomes = root["outcomes"] = nlohmann::ordered_json::array();
    for (const auto& [key, count] : stats.outcome_counts) {
        nlohmann::ordered_json o;
        o["outcome"] = key;
        o["count"] = count;
        o["frequency"] = static_cast<double>(count) / stats.trials;
        if (stats.comparison.compared) {
            auto itp = stats.comparison.oracle_p.find(key);
            if (itp != stats.comparison.oracle_p.end()) o["oracleP"] = itp->second;
            auto itz = stats.comparison.z.find(key);
            if (itz != stats.comparison.z.end()) o["z"] = itz->second;
        }
        outcomes.push_back(std::move(o));
    }

    auto& hists = root["eventTimeHistograms"] = nlohmann::ordered_json::array();
    for (const auto& h : stats.hit_time_histograms) {
        nlohmann::ordered_json jh;
        jh["slot"] = h.slot;
        jh["binWidth"] = h.bin_width;
        jh["bins"] = h.bins;
        jh["overflow"] = h.overflow;
        jh["missing"] = h.missing;
        hists.push_back(std::move(jh));
    }

    auto& fails = root["invariantFailures"] = nlohmann::ordered_json::array();
    for (const auto& f : stats.invariant_failures) {
        nlohmann::ordered_json jf;
        jf["trial"] = f.trial;
        jf["kind"] = f.kind;
        jf["detail"] = f.detail;
        fails.push_back(std::move(jf));
    }

    if (stats.comparison.compared) {
        nlohmann::ordered_json jc;
        jc["chiSquare"] = stats.comparison.chi_square;
        jc["degreesOfFreedom"] = stats.comparison.dof;
        jc["pValue"] = stats.comparison.p_value;
        jc["pass"] = stats.comparison.pass;
        root["oracleComparison"] = std::move(jc);
    }
    return root.dump(2) + "\n";
}

std::string stats_to_csv(const OutcomeStats& stats) {
    std::ostringstream os;
    os << "outcome,count,frequency,oracleP,z\n";
    os.precision(17);
    for (const auto& [key, count] : stats.outcome_counts) {
        os << '"' << key << '"' << ',' << count << ','
           << static_cast<double>(count) / stats.trials << ',';
        if (stats.comparison.compared) {
            auto itp = stats.comparison.oracle_p.find(key);
            if (itp != stats.comparison.oracle_p.end()) os << itp->second;
            os << ',';
            auto itz = stats.comparison.z.find(key);
            if (itz != stats.comparison.z.end()) os << itz->second;
        } else {
            os << ',';
        }
        os << '\n';
    }
    return os.str();
}

} // namespace nrulesim
