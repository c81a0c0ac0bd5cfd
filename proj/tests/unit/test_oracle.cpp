#include "doctest.h"

#include "nrulesim/dynamics.hpp"
#include "nrulesim/oracle.hpp"
#include "nrulesim/philox.hpp"
#include "nrulesim/scenario.hpp"

#include <cmath>
#include <numbers>

using namespace nrulesim;
namespace orc = nrulesim::oracle;

TEST_CASE("jacobi eigensolver diagonalizes a random hermitian matrix") {
    const int n = 6;
    PhiloxStream rng(2718, 0);
    std::vector<Complex> h(n * n);
    for (int i = 0; i < n; ++i) {
        h[i * n + i] = Complex{2.0 * rng.uniform01() - 1.0, 0.0};
        for (int j = i + 1; j < n; ++j) {
            const Complex v{2.0 * rng.uniform01() - 1.0, 2.0 * rng.uniform01() - 1.0};
            h[i * n + j] = v;
            h[j * n + i] = std::conj(v);
        }
    }
    auto es = orc::hermitian_eigensystem(h, n);

    for (int k = 0; k < n; ++k) {
        // residual || H v - lambda v ||
        double resid = 0.0;
        for (int i = 0; i < n; ++i) {
            Complex hv{0.0, 0.0};
            for (int j = 0; j < n; ++j) hv += h[i * n + j] * es.vectors[j + n * k];
            resid += std::norm(hv - es.values[k] * es.vectors[i + n * k]);
        }
        CHECK(std::sqrt(resid) < 1e-10);
    }
    // orthonormality
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            Complex dot{0.0, 0.0};
            for (int i = 0; i < n; ++i)
                dot += std::conj(es.vectors[i + n * a]) * es.vectors[i + n * b];
            CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-12);
        }
}

TEST_CASE("unitary evolution reproduces the two-level closed form") {
    SystemGraph g;
    g.basis = {{0, "a", {}}, {1, "b", {}}};
    g.components = {{0, "ab", {0, 1}, Status::Realized}};
    g.diag = {0.0, 0.0};
    g.couplings = {{0, 1, Complex{1.0, 0.0}, CouplingKind::Continuous}};
    g.initial_amplitudes = {Complex{1.0, 0.0}, Complex{0.0, 0.0}};

    for (double t : {0.3, 1.0, 2.5, 10.0}) {
        auto amp = orc::unitary_evolve(g, t);
        CHECK(std::norm(amp[0]) == doctest::Approx(std::cos(t) * std::cos(t)).epsilon(1e-12));
        CHECK(std::norm(amp[1]) == doctest::Approx(std::sin(t) * std::sin(t)).epsilon(1e-12));
    }
}

TEST_CASE("unitary evolution conserves the norm over long horizons") {
    ScenarioSpec spec = series_counter(4);
    for (double t : {1.0, 10.0, spec.meta.suggested_t_max}) {
        auto amp = orc::unitary_evolve(spec.graph, t);
        double norm = 0.0;
        for (const auto& a : amp) norm += std::norm(a);
        CHECK(std::abs(norm - 1.0) < 1e-8);
    }
}

TEST_CASE("zero couplings leave populations frozen") {
    SystemGraph g;
    g.basis = {{0, "a", {}}, {1, "b", {}}};
    g.components = {{0, "ab", {0, 1}, Status::Realized}};
    g.diag = {0.7, -0.2};
    g.initial_amplitudes = {Complex{0.6, 0.0}, Complex{0.8, 0.0}};
    auto amp = orc::unitary_evolve(g, 3.0);
    CHECK(std::norm(amp[0]) == doctest::Approx(0.36).epsilon(1e-12));
    CHECK(std::norm(amp[1]) == doctest::Approx(0.64).epsilon(1e-12));
    // phases advance with the diagonal energies
    CHECK(std::arg(amp[0]) == doctest::Approx(-0.7 * 3.0).epsilon(1e-9));
}

TEST_CASE("the full hamiltonian mixes both brain tags at once") {
    // the truncated engine never populates B1 before a hit; the full
    // evolution does, which is exactly the exhibited difference
    ScenarioSpec spec = observer_chain(1.0, 1.0, 3);
    std::vector<int> b0_states, b1_states;
    for (const auto& b : spec.graph.basis) {
        if (b.tags.count("B0")) b0_states.push_back(b.index);
        if (b.tags.count("B1")) b1_states.push_back(b.index);
    }
    double best = 0.0;
    for (double t = 0.1; t <= 20.0; t += 0.1) {
        auto amp = orc::unitary_evolve(spec.graph, t);
        double b0 = 0.0, b1 = 0.0;
        for (int i : b0_states) b0 += std::norm(amp[i]);
        for (int i : b1_states) b1 += std::norm(amp[i]);
        best = std::max(best, std::min(b0, b1));
    }
    CHECK(best >= 0.05);
}

TEST_CASE("series counter: the full evolution populates A2 while A1 is nonzero") {
    ScenarioSpec spec = series_counter(3);
    bool simultaneous = false;
    for (double t = 0.2; t <= 10.0; t += 0.2) {
        auto amp = orc::unitary_evolve(spec.graph, t);
        if (std::norm(amp[1]) > 1e-3 && std::norm(amp[2]) > 1e-3) simultaneous = true;
    }
    CHECK(simultaneous);
}

TEST_CASE("race quadrature reproduces the single-channel closed form") {
    ScenarioSpec spec = detector_capture(1.0);
    for (double t_max : {1.0, 3.0, 10.0}) {
        auto race = orc::race_quadrature(spec.graph, t_max);
        const double expect = 1.0 - orc::single_gap_survival(1.0, t_max);
        CHECK(race.probabilities.at("d1") ==
              doctest::Approx(expect).epsilon(1e-8));
        CHECK(race.no_hit == doctest::Approx(1.0 - expect).epsilon(1e-8));
    }
}

TEST_CASE("race quadrature: zero couplings give certain no-hit") {
    ScenarioSpec spec = detector_capture(0.0);
    auto race = orc::race_quadrature(spec.graph, 10.0);
    CHECK(race.no_hit == doctest::Approx(1.0));
    CHECK(race.probabilities.at("d1") == doctest::Approx(0.0));
}

TEST_CASE("race quadrature resolves the constant-ratio branch") {
    ScenarioSpec spec = parallel_branch(1.0, 2.0);
    auto race = orc::race_quadrature(spec.graph, 50.0);
    const double pr = race.probabilities.at("A_r");
    const double pl = race.probabilities.at("A_l");
    CHECK(pr / (pr + pl) == doctest::Approx(0.2).epsilon(1e-7));
    CHECK(pr + pl + race.no_hit == doctest::Approx(1.0).epsilon(1e-9));

    SUBCASE("probabilities converge toward the ratio as the horizon grows") {
        auto longer = orc::race_quadrature(spec.graph, 200.0);
        CHECK(longer.probabilities.at("A_r") == doctest::Approx(0.2).epsilon(1e-5));
    }
    SUBCASE("one dead branch sends everything right") {
        auto one = orc::race_quadrature(parallel_branch(1.0, 0.0).graph, 50.0);
        CHECK(one.probabilities.at("A_l") == doctest::Approx(0.0));
        CHECK(one.probabilities.at("A_r") > 0.99);
    }
}

TEST_CASE("race quadrature self-converges") {
    ScenarioSpec spec = rabi_absorption(1.0, 0.5);
    auto coarse = orc::race_quadrature(spec.graph, 40.0, 1 << 12);
    auto fine = orc::race_quadrature(spec.graph, 40.0, 1 << 13);
    CHECK(std::abs(fine.probabilities.at("emit") - coarse.probabilities.at("emit")) <=
          coarse.error_estimate + fine.error_estimate);
    CHECK(coarse.error_estimate < 1e-6);
}

TEST_CASE("sequence probabilities cover the six branches") {
    ScenarioSpec spec = multi_sequence();
    auto seq = orc::sequence_probabilities(spec.graph, 200.0);
    double total = 0.0;
    int leaves = 0;
    for (const auto& [key, p] : seq.probabilities) {
        total += p;
        if (key.find('>') != std::string::npos) {
            CHECK(p == doctest::Approx(1.0 / 6).epsilon(1e-3));
            ++leaves;
        }
    }
    CHECK(leaves == 6);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sequence probabilities weight asymmetric branches by their ratios") {
    ScenarioSpec spec = multi_sequence({1.0, 2.0, 3.0}, {1.0, 2.0});
    auto seq = orc::sequence_probabilities(spec.graph, 400.0);
    // first level: 1 : 4 : 9 over 14; second level: 1 : 4 over 5
    CHECK(seq.probabilities.at("AB1>AB1a") == doctest::Approx(1.0 / 14 * 0.2).epsilon(1e-3));
    CHECK(seq.probabilities.at("AB3>AB3b") == doctest::Approx(9.0 / 14 * 0.8).epsilon(1e-3));
}

TEST_CASE("registered closed forms") {
    auto survival = orc::closed_forms("single-gap-survival", {{"g", 1.0}, {"t", 1.0}});
    CHECK(survival.values.at("survival") == doctest::Approx(0.5));

    auto rabi = orc::closed_forms("rabi-population", {{"g", 1.0}, {"t", std::numbers::pi / 2}});
    CHECK(rabi.values.at("p1") == doctest::Approx(1.0));

    auto race = orc::closed_forms("constant-race", {{"rateR", 1.0}, {"rateL", 4.0}});
    CHECK(race.values.at("r") == doctest::Approx(0.2));
    CHECK(race.values.at("l") == doctest::Approx(0.8));

    CHECK_THROWS_AS(orc::closed_forms("unknown", {}), orc::OracleError);
    CHECK_THROWS_AS(orc::closed_forms("rabi-population", {{"g", 1.0}}), orc::OracleError);
}

TEST_CASE("engine and oracle integrators agree on the driven pair") {
    // two independently coded routes to the same populations
    SystemGraph g;
    g.basis = {{0, "a", {}}, {1, "b", {}}};
    g.components = {{0, "ab", {0, 1}, Status::Realized}};
    g.diag = {0.3, -0.1};
    g.couplings = {{0, 1, Complex{0.8, 0.2}, CouplingKind::Continuous}};
    g.initial_amplitudes = {Complex{1.0, 0.0}, Complex{0.0, 0.0}};

    WaveState s;
    s.amp = g.initial_amplitudes;
    s.statuses = g.initial_statuses();
    s.refresh_s_active(g);
    auto gen = build_generator(g, s.statuses);

    double max_diff = 0.0;
    for (int k = 0; k < 40; ++k) {
        step(s, g, gen, 0.25);
        auto expect = orc::unitary_evolve(g, s.t);
        for (int i = 0; i < 2; ++i)
            max_diff = std::max(max_diff, std::abs(s.amp[i] - expect[i]));
    }
    CHECK(max_diff < 1e-6);
}
