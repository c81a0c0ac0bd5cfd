#pragma once

#include "nrulesim/graph.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace nrulesim {

// Couplings whose endpoints make them inert under the truncated generator
// (anything touching a Phantom) are dropped; a Continuous coupling that
// would leak out of the realized set is a topology error.
class TopologyError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class IntegratorError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class DegenerateStateError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One gap edge feeding a ready component: d(amp[target])/dt += -i value amp[source].
struct GapInflow {
    int target = 0;   // basis index inside the ready component
    int source = 0;   // realized basis index
    Complex value;    // H[target][source]
};

struct ReadyChannel {
    int component_id = 0;
    std::vector<GapInflow> inflows;
};

// The truncated generator: the Hermitian block over realized members plus
// one-way gap inflow into each ready component. Ready members carry no
// diagonal energy and no internal couplings here; Dormant and Phantom
// members do not appear at all.
struct GeneratorView {
    std::vector<int> realized;        // basis indices, block order
    std::vector<Complex> block;       // row-major, square over `realized`
    std::vector<ReadyChannel> channels;

    int block_dim() const { return static_cast<int>(realized.size()); }
    bool has_channels() const { return !channels.empty(); }

    // damp := -i H_trunc amp (full-dimension vectors; non-active entries -> 0)
    void apply_derivative(const std::vector<Complex>& amp, std::vector<Complex>& damp) const;
};

struct WaveState {
    double t = 0.0;
    std::vector<Complex> amp;
    std::vector<Status> statuses;     // by component position
    double s_active = 0.0;            // total square modulus over Realized + Ready

    void refresh_s_active(const SystemGraph& graph);
};

GeneratorView build_generator(const SystemGraph& graph, const std::vector<Status>& statuses);

std::vector<Complex> derivative(const GeneratorView& gen, const std::vector<Complex>& amp);

// d/dt of the ready component's square modulus: 2 sum Im(conj(amp_m) H[m][n] amp_n).
double gap_current(const WaveState& state, const GeneratorView& gen, int ready_component_id);

struct Hazard {
    double total = 0.0;
    std::vector<std::pair<int, double>> per_component;   // (component id, positive rate)
};

// Per-channel rate max(J_K, 0) / s_active and their sum.
Hazard hazard(const WaveState& state, const GeneratorView& gen);

struct IntegratorOptions {
    double tol = 1e-9;        // local error per unit time, amplitude components
    double quad_tol = 1e-9;   // same, for the accumulated hazard integral
    double dt_init = 1e-3;
    double dt_floor = 1e-12;
};

// Advances the state by dt under the truncated generator (adaptive embedded
// Runge-Kutta with internal sub-stepping). dt = 0 is a no-op.
void step(WaveState& state, const SystemGraph& graph, const GeneratorView& gen, double dt,
          const IntegratorOptions& opts = {});

// Integration engine shared by `step` and the stochastic sampler: evolves
// amp from state.t to t_end, accumulating Lambda = int lambda_total dt when
// requested. `on_substep` (if set) sees the state after every accepted
// substep and may stop the sweep early by returning false.
class TruncatedIntegrator {
public:
    TruncatedIntegrator(const GeneratorView& gen, IntegratorOptions opts);

    // callback: (t, amp, lambda_integral) -> keep_going
    using SubstepCallback = std::function<bool(double, const std::vector<Complex>&, double)>;

    void integrate(double t0, std::vector<Complex>& amp, double& lambda_integral, double t_end,
                   const SubstepCallback& on_substep = nullptr, bool accumulate_hazard = false,
                   const std::vector<double>* forced_stops = nullptr);

private:
    const GeneratorView& gen_;
    IntegratorOptions opts_;
    std::vector<Complex> k_[7];
    std::vector<Complex> y_tmp_, y5_;
    double klam_[7] = {};

    double hazard_total(const std::vector<Complex>& amp) const;
    void rhs(const std::vector<Complex>& amp, std::vector<Complex>& damp, double& dlam,
             bool accumulate_hazard) const;
};

} // namespace nrulesim
