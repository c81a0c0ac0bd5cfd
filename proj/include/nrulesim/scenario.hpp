#pragma once

#include "nrulesim/graph.hpp"

#include <array>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace nrulesim {

// Ensemble-checkable expectations attached to a scenario by its builder.
struct ScenarioMeta {
    double suggested_t_max = 50.0;
    int min_events = 0;
    int max_events = std::numeric_limits<int>::max();
    // every trial's hit sequence must be a prefix of one of these
    std::vector<std::vector<std::string>> allowed_sequences;
    std::vector<std::string> pre_hit_zero_tags;  // populations that must stay 0 until the first hit
    std::string support_tag_prefix;              // terminal support confined to one such tag
};

struct ScenarioSpec {
    std::string id;
    SystemGraph graph;
    ScenarioMeta meta;
};

// ---- builders, one per modeled situation ----

// particle capture by a detector: one gap, one hit
ScenarioSpec detector_capture(double g = 1.0);

// counter chain A0 -> A1 -> ... -> An; `gaps` empty means all couplings 1
ScenarioSpec series_counter(int n, std::vector<double> gaps = {});

// diamond A0 -> {A_r, A_l} -> A_f: two hits, clockwise or counterclockwise
ScenarioSpec parallel_branch(double g_right = 1.0, double g_left = 2.0, double g_final = 1.0);

// capture gap into a window state followed by continuous transport to the
// display end; brain tags B0/B1 mark the two ends
ScenarioSpec observer_chain(double g = 1.0, double hop_rate = 1.0, int chain_len = 3);

// two-level branching tree with six terminal sequences
ScenarioSpec multi_sequence(std::array<double, 3> first = {1.0, 1.0, 1.0},
                            std::array<double, 2> second = {1.0, 1.0});

// driven two-level atom with a spontaneous-emission gap off the excited member
ScenarioSpec rabi_absorption(double g = 1.0, double gamma = 0.25);
ScenarioSpec rabi_emission(double g = 1.0, double gamma = 0.25);

// four-level pump cycle: pump gap, stimulated 2<->1 block, competing
// metastable (off the upper member) and fast (off the lower member) decays
ScenarioSpec laser_cycle(double g = 1.0, double gamma_pump = 1.0, double gamma_meta = 0.3,
                         double gamma_fast = 1.5);

// hopping packet with a site-local decay component at every site;
// center/width default to sites/4 and sites/8, momentum is the packet's
// initial phase gradient
ScenarioSpec neutron_decay(int sites = 16, double hop = 1.0, double g_decay = 0.35,
                           double center = -1.0, double width = -1.0, double momentum = -1.0);

// decoherent bubbles, each a driven two-level block with its own emission
// gap; `weights` empty means square weights proportional to k+1
ScenarioSpec localization(int bubbles = 8, double g = 1.0, double gamma = 0.3,
                          std::vector<double> weights = {});

// ---- registry (CLI / bindings) ----

struct ScenarioParam {
    std::string name;
    double value = 0.0;     // default
    std::string doc;
};

struct ScenarioInfo {
    std::string id;
    std::string summary;
    std::vector<ScenarioParam> params;
};

const std::vector<ScenarioInfo>& scenario_registry();
ScenarioSpec build_scenario(const std::string& id, const std::map<std::string, double>& params = {});

// ---- scenario file format ----

class ScenarioFormatError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string graph_to_json(const SystemGraph& graph);
SystemGraph graph_from_json(const std::string& text);

} // namespace nrulesim
