#include "nrulesim/reduction.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nrulesim {

const char* policy_name(CollapsePolicy p) {
    return p == CollapsePolicy::ZeroNonChosen ? "zero" : "phantom";
}

CollapsePolicy policy_from_name(const std::string& name) {
    if (name == "zero") return CollapsePolicy::ZeroNonChosen;
    if (name == "phantom") return CollapsePolicy::KeepPhantoms;
    throw std::invalid_argument("unknown collapse policy '" + name + "'");
}

namespace {

std::vector<std::pair<int, double>> positive_currents(const std::vector<Complex>& amp,
                                                      const GeneratorView& gen) {
    std::vector<std::pair<int, double>> w;
    w.reserve(gen.channels.size());
    for (const auto& ch : gen.channels) {
        double j = 0.0;
        for (const auto& e : ch.inflows)
            j += std::imag(std::conj(amp[e.target]) * e.value * amp[e.source]);
        w.emplace_back(ch.component_id, std::max(2.0 * j, 0.0));
    }
    return w;
}

} // namespace

std::optional<SampledHit> sample_hit(WaveState& state, const SystemGraph& graph,
                                     const GeneratorView& gen, PhiloxStream& rng, double t_max,
                                     const IntegratorOptions& opts,
                                     const TruncatedIntegrator::SubstepCallback& observer) {
    if (!(t_max > state.t)) throw std::invalid_argument("sample_hit requires t_max > state.t");
    const double threshold = -std::log(rng.uniform01());

    TruncatedIntegrator integ(gen, opts);

    // bracketing substep snapshot
    double t_lo = state.t;
    std::vector<Complex> amp_lo = state.amp;
    double lam_lo = 0.0;

    bool crossed = false;
    double t_hi = 0.0;
    std::vector<Complex> amp_hi;

    double lam = 0.0;
    integ.integrate(state.t, state.amp, lam, t_max,
                    [&](double t, const std::vector<Complex>& amp, double lam_now) {
                        if (observer && !observer(t, amp, lam_now)) return false;
                        if (lam_now >= threshold) {
                            crossed = true;
                            t_hi = t;
                            amp_hi = amp;
                            return false;
                        }
                        t_lo = t;
                        amp_lo = amp;
                        lam_lo = lam_now;
                        return true;
                    },
                    /*accumulate_hazard=*/true);

    if (!crossed) {
        state.t = t_max;
        state.refresh_s_active(graph);
        return std::nullopt;
    }

    // Bisect on the monotone hazard integral inside [t_lo, t_hi]; every probe
    // restarts from the snapshot so the located amplitude carries one
    // integration's worth of error only.
    const double t_anchor = t_lo;
    const std::vector<Complex> amp_anchor = amp_lo;
    const double lam_anchor = lam_lo;
    double lo = t_lo, hi = t_hi;
    while (hi - lo > 1e-6 * std::max(hi, 1e-9)) {
        const double mid = 0.5 * (lo + hi);
        std::vector<Complex> amp_mid = amp_anchor;
        double lam_mid = lam_anchor;
        TruncatedIntegrator probe(gen, opts);
        probe.integrate(t_anchor, amp_mid, lam_mid, mid, nullptr, true);
        if (lam_mid >= threshold) {
            hi = mid;
            amp_hi = std::move(amp_mid);
        } else {
            lo = mid;
        }
    }

    double t_sc = hi;
    auto weights = positive_currents(amp_hi, gen);
    double total = 0.0;
    for (const auto& [id, w] : weights) total += w;

    // Measure-zero guard: if every channel current vanishes exactly at the
    // bisected time, widen toward the bracket end until one is positive.
    double widen = std::max(hi - lo, 1e-6 * std::max(hi, 1e-9));
    while (total <= 0.0 && t_sc < t_hi) {
        t_sc = std::min(t_sc + widen, t_hi);
        widen *= 2.0;
        amp_hi = amp_anchor;
        double lam_tmp = lam_anchor;
        TruncatedIntegrator probe(gen, opts);
        probe.integrate(t_anchor, amp_hi, lam_tmp, t_sc, nullptr, true);
        weights = positive_currents(amp_hi, gen);
        total = 0.0;
        for (const auto& [id, w] : weights) total += w;
    }

    state.t = t_sc;
    state.amp = amp_hi;
    state.refresh_s_active(graph);

    SampledHit hit;
    hit.t_sc = t_sc;
    hit.channel_weights = weights;
    hit.lambda_at_hit = state.s_active > 0.0 ? total / state.s_active : 0.0;

    const double u = rng.uniform01();
    if (total > 0.0) {
        double acc = 0.0;
        hit.chosen = weights.back().first;
        for (const auto& [id, w] : weights) {
            acc += w;
            if (u * total <= acc) {
                hit.chosen = id;
                break;
            }
        }
    } else {
        // no positive current anywhere in the bracket: fall back to a uniform
        // choice so the draw sequence stays aligned
        const std::size_t k = std::min(static_cast<std::size_t>(u * weights.size()),
                                       weights.size() - 1);
        hit.chosen = weights[k].first;
    }
    return hit;
}

void collapse(WaveState& state, const SystemGraph& graph, int chosen_component_id,
              CollapsePolicy policy) {
    int chosen_pos = -1;
    for (std::size_t ci = 0; ci < graph.components.size(); ++ci)
        if (graph.components[ci].id == chosen_component_id) chosen_pos = static_cast<int>(ci);
    if (chosen_pos < 0 || state.statuses[chosen_pos] != Status::Ready)
        throw std::invalid_argument("collapse target must be a ready component");

    for (std::size_t ci = 0; ci < graph.components.size(); ++ci) {
        if (static_cast<int>(ci) == chosen_pos) {
            state.statuses[ci] = Status::Realized;
            continue;
        }
        if (state.statuses[ci] == Status::Realized || state.statuses[ci] == Status::Ready) {
            state.statuses[ci] = Status::Phantom;
            if (policy == CollapsePolicy::ZeroNonChosen)
                for (int m : graph.components[ci].members) state.amp[m] = Complex{0.0, 0.0};
        }
    }
    state.refresh_s_active(graph);
}

GeneratorView relaunch(const SystemGraph& graph, WaveState& state) {
    state.statuses = classify(graph, state.statuses);
    return build_generator(graph, state.statuses);
}

TrajectoryRecord run_trajectory(const SystemGraph& graph, PhiloxStream& rng,
                                const TrajectoryOptions& opts) {
    TrajectoryRecord rec;

    WaveState state;
    state.t = 0.0;
    state.amp = graph.initial_amplitudes;
    state.statuses = classify(graph, graph.initial_statuses());

    // One global scale at launch; the hazard is scale invariant, so this
    // only pins the numbers the log reports (and keeps them comparable
    // across differently normalized inputs).
    double s0 = 0.0;
    for (const auto& a : state.amp) s0 += std::norm(a);
    if (!(s0 > 0.0)) throw std::invalid_argument("initial amplitudes are all zero");
    const double inv_root = 1.0 / std::sqrt(s0);
    for (auto& a : state.amp) a *= inv_root;
    state.refresh_s_active(graph);

    // tag -> watched basis indices
    std::vector<std::pair<std::string, std::vector<int>>> watch;
    for (const auto& tag : opts.watch_tags) {
        std::vector<int> idx;
        for (const auto& b : graph.basis)
            if (b.tags.count(tag)) idx.push_back(b.index);
        watch.emplace_back(tag, std::move(idx));
        rec.tag_watch[tag] = 0.0;
    }

    const bool sampling = opts.sample_every > 0.0;
    double next_sample = 0.0;
    auto take_sample = [&](double t, const std::vector<Complex>& amp) {
        TrajectorySample s;
        s.t = t;
        s.component_modulus.reserve(graph.components.size());
        for (const auto& c : graph.components) {
            double m = 0.0;
            for (int b : c.members) m += std::norm(amp[b]);
            s.component_modulus.push_back(m);
        }
        rec.samples.push_back(std::move(s));
    };
    if (sampling) {
        take_sample(0.0, state.amp);
        next_sample = opts.sample_every;
    }

    bool before_first_hit = true;
    auto observer = [&](double t, const std::vector<Complex>& amp, double) {
        if (before_first_hit)
            for (auto& [tag, idx] : watch) {
                double pop = 0.0;
                for (int i : idx) pop += std::norm(amp[i]);
                rec.tag_watch[tag] = std::max(rec.tag_watch[tag], pop);
            }
        if (sampling)
            while (next_sample <= t * (1.0 + 1e-12)) {
                take_sample(t, amp);
                next_sample += opts.sample_every;
            }
        return true;
    };

    while (state.t < opts.t_max) {
        GeneratorView gen = build_generator(graph, state.statuses);
        if (gen.channels.empty()) break;   // nothing left to choose

        std::optional<SampledHit> hit =
            sample_hit(state, graph, gen, rng, opts.t_max, opts.integrator, observer);
        if (!hit) break;

        StochasticEvent ev;
        ev.t_sc = hit->t_sc;
        ev.chosen = hit->chosen;
        ev.chosen_label = graph.find_component(hit->chosen)->label;
        ev.lambda_at_hit = hit->lambda_at_hit;
        ev.channel_weights = hit->channel_weights;
        ev.s_before = state.s_active;
        collapse(state, graph, hit->chosen, opts.policy);
        ev.s_after = state.s_active;
        rec.events.push_back(std::move(ev));
        before_first_hit = false;

        state.statuses = classify(graph, state.statuses);
    }

    rec.terminal_statuses = state.statuses;
    rec.t_end = state.t;
    rec.s_end = state.s_active;
    for (std::size_t ci = 0; ci < graph.components.size(); ++ci) {
        if (state.statuses[ci] != Status::Realized && state.statuses[ci] != Status::Ready) continue;
        for (int m : graph.components[ci].members)
            if (std::norm(state.amp[m]) > 0.0) rec.terminal_support.push_back(m);
    }
    std::sort(rec.terminal_support.begin(), rec.terminal_support.end());
    return rec;
}

std::string event_log(const TrajectoryRecord& record, double tol, CollapsePolicy policy) {
    nlohmann::ordered_json header;
    header["scenario"] = record.scenario;
    header["seed"] = record.seed;
    header["tol"] = tol;
    header["policy"] = policy_name(policy);
    std::string out = header.dump();
    out.push_back('\n');
    for (const auto& e : record.events) {
        nlohmann::ordered_json line;
        line["t"] = e.t_sc;
        line["chosen"] = e.chosen_label;
        line["lambda"] = e.lambda_at_hit;
        line["sBefore"] = e.s_before;
        line["sAfter"] = e.s_after;
        nlohmann::ordered_json weights;
        for (const auto& [id, w] : e.channel_weights) weights[std::to_string(id)] = w;
        line["weights"] = std::move(weights);
        out += line.dump();
        out.push_back('\n');
    }
    return out;
}

} // namespace nrulesim
