#include "nrulesim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace nrulesim {

namespace {

constexpr double kSActiveFloor = 1e-120;

// Dormand-Prince 5(4) coefficients.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                 A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784,
                 B6 = 11.0 / 84;
// y5 - y4, for the embedded error estimate
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200,
                 E6 = 22.0 / 525, E7 = -1.0 / 40;

} // namespace

void GeneratorView::apply_derivative(const std::vector<Complex>& amp,
                                     std::vector<Complex>& damp) const {
    std::fill(damp.begin(), damp.end(), Complex{0.0, 0.0});
    const int n = block_dim();
    const Complex mi{0.0, -1.0};
    for (int r = 0; r < n; ++r) {
        Complex acc{0.0, 0.0};
        const Complex* row = block.data() + static_cast<std::size_t>(r) * n;
        for (int c = 0; c < n; ++c) acc += row[c] * amp[realized[c]];
        damp[realized[r]] = mi * acc;
    }
    for (const auto& ch : channels)
        for (const auto& e : ch.inflows) damp[e.target] += mi * (e.value * amp[e.source]);
}

void WaveState::refresh_s_active(const SystemGraph& graph) {
    double s = 0.0;
    for (std::size_t ci = 0; ci < graph.components.size(); ++ci) {
        if (statuses[ci] != Status::Realized && statuses[ci] != Status::Ready) continue;
        for (int m : graph.components[ci].members) s += std::norm(amp[m]);
    }
    s_active = s;
}

GeneratorView build_generator(const SystemGraph& graph, const std::vector<Status>& statuses) {
    const int dim = graph.dimension();
    std::vector<int> owner(dim, -1);
    for (std::size_t ci = 0; ci < graph.components.size(); ++ci)
        for (int m : graph.components[ci].members) owner[m] = static_cast<int>(ci);

    GeneratorView gen;
    std::vector<int> block_pos(dim, -1);
    for (int i = 0; i < dim; ++i) {
        if (owner[i] >= 0 && statuses[owner[i]] == Status::Realized) {
            block_pos[i] = static_cast<int>(gen.realized.size());
            gen.realized.push_back(i);
        }
    }
    const int n = gen.block_dim();
    gen.block.assign(static_cast<std::size_t>(n) * n, Complex{0.0, 0.0});
    for (int r = 0; r < n; ++r)
        gen.block[static_cast<std::size_t>(r) * n + r] = graph.diag[gen.realized[r]];

    std::map<int, ReadyChannel> channels;
    for (std::size_t ci = 0; ci < graph.components.size(); ++ci)
        if (statuses[ci] == Status::Ready)
            channels[graph.components[ci].id] = ReadyChannel{graph.components[ci].id, {}};

    // H[to][from] = value, H[from][to] = conj(value); duplicates must agree
    // (graph validation enforces this), so entries are assigned, not summed.
    for (const auto& cpl : graph.couplings) {
        if (cpl.from < 0 || cpl.from >= dim || cpl.to < 0 || cpl.to >= dim ||
            owner[cpl.from] < 0 || owner[cpl.to] < 0)
            throw std::invalid_argument("coupling " + std::to_string(cpl.from) + "->" +
                                        std::to_string(cpl.to) +
                                        " references a basis state outside the component cover");
        const Status sf = statuses[owner[cpl.from]];
        const Status st = statuses[owner[cpl.to]];
        if (sf == Status::Phantom || st == Status::Phantom) continue;

        if (cpl.kind == CouplingKind::Continuous) {
            const bool from_r = sf == Status::Realized;
            const bool to_r = st == Status::Realized;
            if (from_r && to_r) {
                if (cpl.from != cpl.to) {
                    gen.block[static_cast<std::size_t>(block_pos[cpl.to]) * n + block_pos[cpl.from]] = cpl.value;
                    gen.block[static_cast<std::size_t>(block_pos[cpl.from]) * n + block_pos[cpl.to]] =
                        std::conj(cpl.value);
                } else {
                    gen.block[static_cast<std::size_t>(block_pos[cpl.from]) * n + block_pos[cpl.from]] +=
                        cpl.value.real();
                }
            } else if (from_r || to_r) {
                // a continuous coupling may not leak out of the realized set
                throw TopologyError("continuous coupling " + std::to_string(cpl.from) + "->" +
                                    std::to_string(cpl.to) +
                                    " connects a realized member to a non-realized one");
            }
            // continuous couplings among ready/dormant members are withheld
        } else {
            if (sf == Status::Realized && st == Status::Ready) {
                channels[graph.components[owner[cpl.to]].id].inflows.push_back(
                    GapInflow{cpl.to, cpl.from, cpl.value});
            } else if (sf == Status::Realized && st == Status::Dormant) {
                throw TopologyError("gap " + std::to_string(cpl.from) + "->" + std::to_string(cpl.to) +
                                    " feeds a dormant component; statuses are not a classify fixed point");
            }
            // gaps whose source is not realized carry no current
        }
    }
    gen.channels.reserve(channels.size());
    for (auto& [id, ch] : channels) gen.channels.push_back(std::move(ch));
    return gen;
}

std::vector<Complex> derivative(const GeneratorView& gen, const std::vector<Complex>& amp) {
    std::vector<Complex> damp(amp.size());
    gen.apply_derivative(amp, damp);
    return damp;
}

namespace {

double channel_current(const std::vector<Complex>& amp, const ReadyChannel& ch) {
    double j = 0.0;
    for (const auto& e : ch.inflows)
        j += std::imag(std::conj(amp[e.target]) * e.value * amp[e.source]);
    return 2.0 * j;
}

} // namespace

double gap_current(const WaveState& state, const GeneratorView& gen, int ready_component_id) {
    for (const auto& ch : gen.channels)
        if (ch.component_id == ready_component_id) return channel_current(state.amp, ch);
    throw std::invalid_argument("component " + std::to_string(ready_component_id) +
                                " is not ready in this generator");
}

Hazard hazard(const WaveState& state, const GeneratorView& gen) {
    if (!(state.s_active > kSActiveFloor))
        throw DegenerateStateError("active square modulus is numerically zero");
    Hazard h;
    for (const auto& ch : gen.channels) {
        const double rate = std::max(channel_current(state.amp, ch), 0.0) / state.s_active;
        h.per_component.emplace_back(ch.component_id, rate);
        h.total += rate;
    }
    return h;
}

TruncatedIntegrator::TruncatedIntegrator(const GeneratorView& gen, IntegratorOptions opts)
    : gen_(gen), opts_(opts) {}

double TruncatedIntegrator::hazard_total(const std::vector<Complex>& amp) const {
    double s = 0.0;
    for (int i : gen_.realized) s += std::norm(amp[i]);
    for (const auto& ch : gen_.channels)
        for (const auto& e : ch.inflows) s += std::norm(amp[e.target]);
    if (!(s > kSActiveFloor)) throw DegenerateStateError("active square modulus is numerically zero");
    double total = 0.0;
    for (const auto& ch : gen_.channels) total += std::max(channel_current(amp, ch), 0.0);
    return total / s;
}

void TruncatedIntegrator::rhs(const std::vector<Complex>& amp, std::vector<Complex>& damp,
                              double& dlam, bool accumulate_hazard) const {
    gen_.apply_derivative(amp, damp);
    dlam = accumulate_hazard ? hazard_total(amp) : 0.0;
}

void TruncatedIntegrator::integrate(double t0, std::vector<Complex>& amp, double& lambda_integral,
                                    double t_end, const SubstepCallback& on_substep,
                                    bool accumulate_hazard,
                                    const std::vector<double>* forced_stops) {
    if (!(t_end > t0)) return;
    const std::size_t dim = amp.size();
    for (auto& k : k_) k.assign(dim, Complex{});
    y_tmp_.assign(dim, Complex{});
    y5_.assign(dim, Complex{});

    std::size_t stop_idx = 0;
    if (forced_stops)
        while (stop_idx < forced_stops->size() && (*forced_stops)[stop_idx] <= t0) ++stop_idx;

    double t = t0;
    double lam = lambda_integral;
    double h = std::min(opts_.dt_init, t_end - t0);
    bool have_k1 = false;

    // Lambda is carried as an extra state variable through the same embedded
    // scheme, so its per-step quadrature error obeys quad_tol.
    while (t < t_end) {
        if (t_end - t <= 1e-14 * std::max(1.0, std::abs(t_end))) break;
        double ceiling = t_end;
        if (forced_stops && stop_idx < forced_stops->size())
            ceiling = std::min(ceiling, (*forced_stops)[stop_idx]);
        if (h > ceiling - t) h = ceiling - t;

        if (!have_k1) rhs(amp, k_[0], klam_[0], accumulate_hazard);

        auto stage = [&](const double* coef, int count, int out) {
            for (std::size_t i = 0; i < dim; ++i) {
                Complex acc{0.0, 0.0};
                for (int s = 0; s < count; ++s) acc += coef[s] * k_[s][i];
                y_tmp_[i] = amp[i] + h * acc;
            }
            rhs(y_tmp_, k_[out], klam_[out], accumulate_hazard);
        };
        const double c2[] = {A21};
        stage(c2, 1, 1);
        const double c3[] = {A31, A32};
        stage(c3, 2, 2);
        const double c4[] = {A41, A42, A43};
        stage(c4, 3, 3);
        const double c5[] = {A51, A52, A53, A54};
        stage(c5, 4, 4);
        const double c6[] = {A61, A62, A63, A64, A65};
        stage(c6, 5, 5);
        for (std::size_t i = 0; i < dim; ++i)
            y5_[i] = amp[i] + h * (B1 * k_[0][i] + B3 * k_[2][i] + B4 * k_[3][i] + B5 * k_[4][i] +
                                   B6 * k_[5][i]);
        rhs(y5_, k_[6], klam_[6], accumulate_hazard);

        // error per unit time, with a roundoff floor: a forced sliver of a
        // step cannot beat machine precision and should not be rejected for it
        constexpr double kRoundoffFloor = 1e-14;
        double err_ratio = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const Complex e = h * (E1 * k_[0][i] + E3 * k_[2][i] + E4 * k_[3][i] + E5 * k_[4][i] +
                                   E6 * k_[5][i] + E7 * k_[6][i]);
            const double scale =
                std::max(opts_.tol * h, kRoundoffFloor) * (1.0 + std::abs(y5_[i]));
            err_ratio = std::max(err_ratio, std::abs(e) / scale);
        }
        double lam5 = lam;
        if (accumulate_hazard) {
            lam5 = lam + h * (B1 * klam_[0] + B3 * klam_[2] + B4 * klam_[3] + B5 * klam_[4] +
                              B6 * klam_[5]);
            const double e_lam = h * (E1 * klam_[0] + E3 * klam_[2] + E4 * klam_[3] +
                                      E5 * klam_[4] + E6 * klam_[5] + E7 * klam_[6]);
            const double scale =
                std::max(opts_.quad_tol * h, kRoundoffFloor) * (1.0 + std::abs(lam5));
            err_ratio = std::max(err_ratio, std::abs(e_lam) / scale);
        }

        if (!std::isfinite(err_ratio)) {
            have_k1 = true;
            h *= 0.1;
            if (h < opts_.dt_floor)
                throw IntegratorError("non-finite error estimate at t=" + std::to_string(t));
            continue;
        }
        if (err_ratio <= 1.0) {
            t += h;
            std::swap(amp, y5_);
            lam = lam5;
            std::swap(k_[0], k_[6]); // FSAL
            klam_[0] = klam_[6];
            have_k1 = true;
            if (forced_stops && stop_idx < forced_stops->size() &&
                t >= (*forced_stops)[stop_idx] - 1e-15 * std::max(1.0, std::abs(t)))
                ++stop_idx;
            if (on_substep && !on_substep(t, amp, lam)) {
                lambda_integral = lam;
                return;
            }
            const double grow = err_ratio > 1e-10 ? 0.9 * std::pow(err_ratio, -0.25) : 5.0;
            h *= std::clamp(grow, 0.2, 5.0);
        } else {
            have_k1 = true; // k1 still valid at the unchanged t
            h *= std::clamp(0.9 * std::pow(err_ratio, -0.25), 0.1, 0.9);
            if (h < opts_.dt_floor)
                throw IntegratorError("step size underflow at t=" + std::to_string(t));
        }
    }
    lambda_integral = lam;
}

void step(WaveState& state, const SystemGraph& graph, const GeneratorView& gen, double dt,
          const IntegratorOptions& opts) {
    if (dt == 0.0) return;
    if (dt < 0.0) throw std::invalid_argument("step requires dt >= 0");
    TruncatedIntegrator integ(gen, opts);
    double lam = 0.0;
    integ.integrate(state.t, state.amp, lam, state.t + dt);
    state.t += dt;
    state.refresh_s_active(graph);
}

} // namespace nrulesim
