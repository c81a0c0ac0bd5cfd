#pragma once

#include "nrulesim/dynamics.hpp"
#include "nrulesim/graph.hpp"
#include "nrulesim/philox.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nrulesim {

// What to do with the non-chosen components at a hit. Both give identical
// dynamics because phantoms are excluded from the generator and from s;
// zeroing matches the primary rule, keeping them exercises the equivalence.
enum class CollapsePolicy { ZeroNonChosen, KeepPhantoms };

const char* policy_name(CollapsePolicy p);
CollapsePolicy policy_from_name(const std::string& name);

struct StochasticEvent {
    double t_sc = 0.0;
    int chosen = -1;                 // component id
    std::string chosen_label;
    double lambda_at_hit = 0.0;      // total rate at t_sc
    std::vector<std::pair<int, double>> channel_weights;   // id -> positive current at t_sc
    double s_before = 0.0;
    double s_after = 0.0;
};

struct TrajectorySample {
    double t = 0.0;
    std::vector<double> component_modulus;   // |amp|^2 summed per component position
};

struct TrajectoryRecord {
    std::string scenario;
    std::uint64_t seed = 0;          // stream id of this trial
    std::vector<StochasticEvent> events;
    std::vector<Status> terminal_statuses;
    std::vector<TrajectorySample> samples;
    std::map<std::string, double> tag_watch;   // tag -> max population seen before the first hit
    std::vector<int> terminal_support;         // active basis indices with nonzero amplitude
    double t_end = 0.0;
    double s_end = 0.0;                        // active square modulus at the end

    std::vector<std::string> signature() const {
        std::vector<std::string> s;
        s.reserve(events.size());
        for (const auto& e : events) s.push_back(e.chosen_label);
        return s;
    }
};

struct TrajectoryOptions {
    double t_max = 50.0;
    CollapsePolicy policy = CollapsePolicy::ZeroNonChosen;
    double sample_every = 0.0;               // 0 disables time series
    IntegratorOptions integrator;
    std::vector<std::string> watch_tags;     // populations tracked until the first hit
};

struct SampledHit {
    double t_sc = 0.0;
    int chosen = -1;
    double lambda_at_hit = 0.0;
    std::vector<std::pair<int, double>> channel_weights;
};

// First-passage draw for the inhomogeneous hit process: threshold -ln(u) on
// the accumulated hazard, bisected to relative precision 1e-6 inside the
// bracketing substep, channel chosen proportionally to the positive currents
// at t_sc. Returns nullopt (state evolved to t_max) when the threshold is
// not reached. The state is left at t_sc (hit) or t_max (no hit).
std::optional<SampledHit> sample_hit(WaveState& state, const SystemGraph& graph,
                                     const GeneratorView& gen, PhiloxStream& rng, double t_max,
                                     const IntegratorOptions& opts,
                                     const TruncatedIntegrator::SubstepCallback& observer = nullptr);

// The chosen ready component becomes realized keeping its accumulated
// amplitudes; every other realized or ready component is spent.
void collapse(WaveState& state, const SystemGraph& graph, int chosen_component_id,
              CollapsePolicy policy);

// Classify from the fresh post-collapse statuses and build the next generator.
GeneratorView relaunch(const SystemGraph& graph, WaveState& state);

TrajectoryRecord run_trajectory(const SystemGraph& graph, PhiloxStream& rng,
                                const TrajectoryOptions& opts);

// JSON-lines event log: one header line, one line per event.
std::string event_log(const TrajectoryRecord& record, double tol, CollapsePolicy policy);

} // namespace nrulesim
