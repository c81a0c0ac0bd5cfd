#include "doctest.h"

#include "nrulesim/scenario.hpp"

#include <cstring>

using namespace nrulesim;

TEST_CASE("every registered scenario validates and classifies") {
    int count = 0;
    for (const auto& info : scenario_registry()) {
        ScenarioSpec spec = build_scenario(info.id);
        INFO(info.id);
        CHECK(validate(spec.graph).ok());
        CHECK_NOTHROW(classify(spec.graph, spec.graph.initial_statuses()));
        CHECK(spec.meta.suggested_t_max > 0.0);
        ++count;
    }
    CHECK(count == 10);
}

TEST_CASE("scenario files round-trip bit-exactly") {
    for (const auto& info : scenario_registry()) {
        ScenarioSpec spec = build_scenario(info.id);
        const std::string text = graph_to_json(spec.graph);
        SystemGraph parsed = graph_from_json(text);
        INFO(info.id);
        CHECK(graph_to_json(parsed) == text);

        REQUIRE(parsed.basis.size() == spec.graph.basis.size());
        for (std::size_t i = 0; i < parsed.basis.size(); ++i) {
            CHECK(parsed.basis[i].label == spec.graph.basis[i].label);
            CHECK(parsed.basis[i].tags == spec.graph.basis[i].tags);
        }
        REQUIRE(parsed.initial_amplitudes.size() == spec.graph.initial_amplitudes.size());
        for (std::size_t i = 0; i < parsed.initial_amplitudes.size(); ++i) {
            // bit-exact doubles, not approximately equal
            CHECK(std::memcmp(&parsed.initial_amplitudes[i], &spec.graph.initial_amplitudes[i],
                              sizeof(Complex)) == 0);
        }
        REQUIRE(parsed.couplings.size() == spec.graph.couplings.size());
        for (std::size_t i = 0; i < parsed.couplings.size(); ++i) {
            CHECK(parsed.couplings[i].from == spec.graph.couplings[i].from);
            CHECK(parsed.couplings[i].to == spec.graph.couplings[i].to);
            CHECK(std::memcmp(&parsed.couplings[i].value, &spec.graph.couplings[i].value,
                              sizeof(Complex)) == 0);
            CHECK(parsed.couplings[i].kind == spec.graph.couplings[i].kind);
        }
    }
}

TEST_CASE("unknown and missing keys are rejected") {
    ScenarioSpec spec = detector_capture();
    std::string text = graph_to_json(spec.graph);

    SUBCASE("unknown top-level key") {
        std::string bad = text;
        bad.insert(bad.find("\"basis\""), "\"extra\": 1,\n  ");
        CHECK_THROWS_AS(graph_from_json(bad), ScenarioFormatError);
    }
    SUBCASE("unknown nested key") {
        std::string bad = text;
        bad.insert(bad.find("\"index\""), "\"color\": \"red\",\n      ");
        CHECK_THROWS_AS(graph_from_json(bad), ScenarioFormatError);
    }
    SUBCASE("missing required key") {
        auto pos = text.find("\"diag\"");
        auto end = text.find("\"couplings\"");
        std::string bad = text.substr(0, pos) + text.substr(end);
        CHECK_THROWS_AS(graph_from_json(bad), ScenarioFormatError);
    }
    SUBCASE("bad status name") {
        std::string bad = text;
        auto pos = bad.find("\"realized\"");
        bad.replace(pos, std::strlen("\"realized\""), "\"alive\"");
        CHECK_THROWS_AS(graph_from_json(bad), std::exception);
    }
    SUBCASE("garbage input") {
        CHECK_THROWS_AS(graph_from_json("not json at all"), ScenarioFormatError);
    }
}

TEST_CASE("basis states listed out of index order are normalized") {
    ScenarioSpec spec = detector_capture(1.0);
    std::string text = graph_to_json(spec.graph);
    // swap the two basis entries in the file
    auto first = text.find("{\n      \"index\": 0");
    auto second = text.find("{\n      \"index\": 1");
    REQUIRE(first != std::string::npos);
    REQUIRE(second != std::string::npos);
    auto first_end = text.find('}', first) + 1;
    auto second_end = text.find('}', second) + 1;
    const std::string swapped = text.substr(0, first) + text.substr(second, second_end - second) +
                                text.substr(first_end, second - first_end) +
                                text.substr(first, first_end - first) + text.substr(second_end);
    SystemGraph parsed = graph_from_json(swapped);
    CHECK(validate(parsed).ok());
    CHECK(parsed.basis[0].index == 0);
    CHECK(parsed.basis[0].label == "psi.d0");
    CHECK(parsed.basis[1].label == "d1");
}

TEST_CASE("builder structure matches the modeled situations") {
    SUBCASE("detector capture is two components and one gap") {
        ScenarioSpec s = detector_capture(2.0);
        CHECK(s.graph.components.size() == 2);
        CHECK(s.graph.couplings.size() == 1);
        CHECK(s.graph.couplings[0].kind == CouplingKind::Gap);
        CHECK(s.meta.min_events == 1);
        CHECK(s.meta.max_events == 1);
    }
    SUBCASE("zero coupling means no expected hits") {
        CHECK(detector_capture(0.0).meta.max_events == 0);
    }
    SUBCASE("counter expects one hit per live gap") {
        CHECK(series_counter(4).meta.min_events == 4);
        CHECK(series_counter(2, {1.0, 0.0}).meta.min_events == 1);
        CHECK_THROWS_AS(series_counter(1), std::invalid_argument);
    }
    SUBCASE("branch diamond has six possible leaf paths in the tree case") {
        CHECK(multi_sequence().meta.allowed_sequences.size() == 6);
        CHECK(parallel_branch().meta.allowed_sequences.size() == 2);
    }
    SUBCASE("observer chain tags the ends") {
        ScenarioSpec s = observer_chain(1.0, 1.0, 4);
        int b0 = 0, b1 = 0;
        for (const auto& b : s.graph.basis) {
            b0 += b.tags.count("B0");
            b1 += b.tags.count("B1");
        }
        CHECK(b0 == 2);   // source and window
        CHECK(b1 == 1);   // display end
        CHECK(s.meta.pre_hit_zero_tags == std::vector<std::string>{"B1"});
    }
    SUBCASE("absorption and emission differ only in initial placement") {
        ScenarioSpec a = rabi_absorption(1.0, 0.5);
        ScenarioSpec e = rabi_emission(1.0, 0.5);
        CHECK(a.graph.components.size() == e.graph.components.size());
        CHECK(a.graph.couplings.size() == e.graph.couplings.size());
        // absorption: gap leaves the second member; emission: the first
        CHECK(a.graph.couplings[1].from == 1);
        CHECK(e.graph.couplings[1].from == 0);
    }
    SUBCASE("localization weights follow the declared decomposition") {
        ScenarioSpec s = localization(4, 1.0, 0.3);
        double total = 0.0;
        for (const auto& amp : s.graph.initial_amplitudes) total += std::norm(amp);
        CHECK(total == doctest::Approx(1.0));
        CHECK(s.meta.support_tag_prefix == "bubble:");
        CHECK(localization(1, 1.0, 0.3).graph.components.size() == 2);
    }
    SUBCASE("neutron packet is normalized and carries momentum") {
        ScenarioSpec s = neutron_decay(12, 1.0, 0.4);
        double total = 0.0;
        for (const auto& amp : s.graph.initial_amplitudes) total += std::norm(amp);
        CHECK(total == doctest::Approx(1.0));
        // phases differ from site to site
        bool varied = false;
        for (int j = 1; j < 12; ++j) {
            const Complex a = s.graph.initial_amplitudes[j - 1];
            const Complex b = s.graph.initial_amplitudes[j];
            if (std::abs(a) > 0 && std::abs(b) > 0 &&
                std::abs(std::arg(b) - std::arg(a)) > 1e-3)
                varied = true;
        }
        CHECK(varied);
    }
}

TEST_CASE("registry dispatch honors parameters and rejects unknown ones") {
    ScenarioSpec s = build_scenario("parallel-branch", {{"gR", 3.0}, {"gL", 4.0}});
    CHECK(s.graph.couplings[0].value == Complex{3.0, 0.0});
    CHECK(s.graph.couplings[1].value == Complex{4.0, 0.0});

    CHECK_THROWS_AS(build_scenario("parallel-branch", {{"bogus", 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(build_scenario("no-such-scenario"), std::invalid_argument);
    CHECK_THROWS_AS(build_scenario("series-counter", {{"n", 2.5}}), std::invalid_argument);
}
