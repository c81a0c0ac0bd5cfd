#include "nrulesim/scenario.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace nrulesim {

namespace {

// Horizon generous enough that a gap with coupling g has survival below
// 1e-8 at the horizon; trajectories stop at their last hit anyway, so the
// slack costs nothing.
double horizon(double min_positive_gap, int stages = 1) {
    if (min_positive_gap <= 0.0) return 50.0;
    return 3.0e4 * stages / min_positive_gap;
}

class GraphBuilder {
public:
    int state(const std::string& label, std::vector<std::string> tags = {}) {
        BasisState b;
        b.index = static_cast<int>(g_.basis.size());
        b.label = label;
        b.tags.insert(tags.begin(), tags.end());
        g_.basis.push_back(std::move(b));
        g_.diag.push_back(0.0);
        g_.initial_amplitudes.emplace_back(0.0, 0.0);
        return g_.basis.back().index;
    }
    int component(const std::string& label, std::vector<int> members, Status status) {
        Component c;
        c.id = static_cast<int>(g_.components.size());
        c.label = label;
        c.members = std::move(members);
        c.initial_status = status;
        g_.components.push_back(std::move(c));
        return g_.components.back().id;
    }
    void continuous(int from, int to, Complex v) {
        g_.couplings.push_back({from, to, v, CouplingKind::Continuous});
    }
    void gap(int from, int to, Complex v) {
        g_.couplings.push_back({from, to, v, CouplingKind::Gap});
    }
    void amplitude(int index, Complex a) { g_.initial_amplitudes[index] = a; }
    SystemGraph take() { return std::move(g_); }

private:
    SystemGraph g_;
};

} // namespace

ScenarioSpec detector_capture(double g) {
    GraphBuilder b;
    const int s_psi = b.state("psi.d0");
    const int s_d1 = b.state("d1");
    b.component("psi_d0", {s_psi}, Status::Realized);
    b.component("d1", {s_d1}, Status::Dormant);
    b.gap(s_psi, s_d1, g);
    b.amplitude(s_psi, 1.0);

    ScenarioSpec spec{"detector-capture", b.take(), {}};
    spec.meta.suggested_t_max = horizon(g);
    spec.meta.min_events = spec.meta.max_events = (g != 0.0) ? 1 : 0;
    spec.meta.allowed_sequences = {{"d1"}};
    return spec;
}

ScenarioSpec series_counter(int n, std::vector<double> gaps) {
    if (n < 2) throw std::invalid_argument("series_counter requires n >= 2");
    if (gaps.empty()) gaps.assign(n, 1.0);
    if (gaps.size() == 1) gaps.assign(n, gaps[0]);
    if (static_cast<int>(gaps.size()) != n)
        throw std::invalid_argument("series_counter: need one coupling per gap");

    GraphBuilder b;
    std::vector<int> states(n + 1);
    for (int i = 0; i <= n; ++i) {
        states[i] = b.state("A" + std::to_string(i));
        b.component("A" + std::to_string(i), {states[i]},
                    i == 0 ? Status::Realized : Status::Dormant);
    }
    for (int i = 0; i < n; ++i) b.gap(states[i], states[i + 1], gaps[i]);
    b.amplitude(states[0], 1.0);

    // hits reach exactly the run of leading nonzero couplings
    int reachable = 0;
    double min_pos = 0.0;
    while (reachable < n && gaps[reachable] != 0.0) {
        min_pos = min_pos == 0.0 ? std::abs(gaps[reachable])
                                 : std::min(min_pos, std::abs(gaps[reachable]));
        ++reachable;
    }

    ScenarioSpec spec{"series-counter", b.take(), {}};
    spec.meta.suggested_t_max = horizon(min_pos, std::max(reachable, 1));
    spec.meta.min_events = spec.meta.max_events = reachable;
    std::vector<std::string> chain;
    for (int i = 1; i <= n; ++i) chain.push_back("A" + std::to_string(i));
    spec.meta.allowed_sequences = {chain};
    return spec;
}

ScenarioSpec parallel_branch(double g_right, double g_left, double g_final) {
    GraphBuilder b;
    const int a0 = b.state("A0");
    const int ar = b.state("A_r");
    const int al = b.state("A_l");
    const int af = b.state("A_f");
    b.component("A0", {a0}, Status::Realized);
    b.component("A_r", {ar}, Status::Dormant);
    b.component("A_l", {al}, Status::Dormant);
    b.component("A_f", {af}, Status::Dormant);
    b.gap(a0, ar, g_right);
    b.gap(a0, al, g_left);
    b.gap(ar, af, g_final);
    b.gap(al, af, g_final);
    b.amplitude(a0, 1.0);

    ScenarioSpec spec{"parallel-branch", b.take(), {}};
    const bool branch = g_right != 0.0 || g_left != 0.0;
    const int hits = !branch ? 0 : (g_final != 0.0 ? 2 : 1);
    spec.meta.min_events = spec.meta.max_events = hits;
    double min_pos = 0.0;
    for (double g : {g_right, g_left, g_final})
        if (g != 0.0) min_pos = min_pos == 0.0 ? std::abs(g) : std::min(min_pos, std::abs(g));
    spec.meta.suggested_t_max = horizon(min_pos, 2);
    spec.meta.allowed_sequences = {{"A_r", "A_f"}, {"A_l", "A_f"}};
    return spec;
}

ScenarioSpec observer_chain(double g, double hop_rate, int chain_len) {
    if (chain_len < 2) throw std::invalid_argument("observer_chain requires chain_len >= 2");
    GraphBuilder b;
    const int src = b.state("psi.d0.B0", {"B0"});
    std::vector<int> chain(chain_len);
    for (int i = 0; i < chain_len; ++i) {
        if (i == 0)
            chain[i] = b.state("d1w.B0", {"B0"});
        else if (i == chain_len - 1)
            chain[i] = b.state("d1d.B1", {"B1"});
        else
            chain[i] = b.state("d1m" + std::to_string(i));
    }
    b.component("psi_d0_B0", {src}, Status::Realized);
    b.component("d1_chain", chain, Status::Dormant);
    b.gap(src, chain[0], g);
    for (int i = 0; i + 1 < chain_len; ++i) b.continuous(chain[i], chain[i + 1], hop_rate);
    b.amplitude(src, 1.0);

    ScenarioSpec spec{"observer-chain", b.take(), {}};
    spec.meta.suggested_t_max = horizon(g);
    spec.meta.min_events = spec.meta.max_events = (g != 0.0) ? 1 : 0;
    spec.meta.pre_hit_zero_tags = {"B1"};
    spec.meta.allowed_sequences = {{"d1_chain"}};
    return spec;
}

ScenarioSpec multi_sequence(std::array<double, 3> first, std::array<double, 2> second) {
    GraphBuilder b;
    const int root = b.state("AB0");
    b.component("AB0", {root}, Status::Realized);
    b.amplitude(root, 1.0);

    std::vector<std::vector<std::string>> sequences;
    double min_pos = 0.0;
    auto track = [&](double g) {
        if (g != 0.0) min_pos = min_pos == 0.0 ? std::abs(g) : std::min(min_pos, std::abs(g));
    };
    for (int i = 0; i < 3; ++i) {
        const std::string mid_label = "AB" + std::to_string(i + 1);
        const int mid = b.state(mid_label);
        b.component(mid_label, {mid}, Status::Dormant);
        b.gap(root, mid, first[i]);
        track(first[i]);
        const char* suffix[2] = {"a", "b"};
        for (int j = 0; j < 2; ++j) {
            const std::string leaf_label = mid_label + suffix[j];
            const int leaf = b.state(leaf_label);
            b.component(leaf_label, {leaf}, Status::Dormant);
            b.gap(mid, leaf, second[j]);
            track(second[j]);
            sequences.push_back({mid_label, leaf_label});
        }
    }

    ScenarioSpec spec{"multi-sequence", b.take(), {}};
    const bool any_first = first[0] != 0.0 || first[1] != 0.0 || first[2] != 0.0;
    const bool any_second = second[0] != 0.0 || second[1] != 0.0;
    const int hits = !any_first ? 0 : (any_second ? 2 : 1);
    spec.meta.min_events = spec.meta.max_events = hits;
    spec.meta.suggested_t_max = horizon(min_pos, 2);
    spec.meta.allowed_sequences = std::move(sequences);
    return spec;
}

namespace {

ScenarioSpec rabi_with_emission(const std::string& id, double g, double gamma, bool start_excited) {
    GraphBuilder b;
    // state 0 carries the initial amplitude; the gap leaves the excited member
    const int s0 = b.state(start_excited ? "gn.a1" : "gn.a0");
    const int s1 = b.state(start_excited ? "gn+1.a0" : "gn-1.a1");
    const int emit = b.state(start_excited ? "gn.a0.g" : "gn-1.a0.g");
    b.component("rabi", {s0, s1}, Status::Realized);
    b.component("emit", {emit}, Status::Dormant);
    b.continuous(s0, s1, g);
    b.gap(start_excited ? s0 : s1, emit, gamma);
    b.amplitude(s0, 1.0);

    ScenarioSpec spec{id, b.take(), {}};
    if (gamma != 0.0) {
        spec.meta.min_events = spec.meta.max_events = 1;
        spec.meta.suggested_t_max = 60.0 / (gamma * gamma);
    } else {
        spec.meta.min_events = spec.meta.max_events = 0;
        spec.meta.suggested_t_max = g != 0.0 ? 100.0 * std::numbers::pi / std::abs(g) : 50.0;
    }
    spec.meta.allowed_sequences = {{"emit"}};
    return spec;
}

} // namespace

ScenarioSpec rabi_absorption(double g, double gamma) {
    return rabi_with_emission("rabi-absorption", g, gamma, false);
}

ScenarioSpec rabi_emission(double g, double gamma) {
    return rabi_with_emission("rabi-emission", g, gamma, true);
}

ScenarioSpec laser_cycle(double g, double gamma_pump, double gamma_meta, double gamma_fast) {
    GraphBuilder b;
    const int a3 = b.state("gn.a3");
    const int a2 = b.state("gn.a2.ex");
    const int a1 = b.state("gn+1.a1.ex");
    const int meta = b.state("gn.a1.ex.g");
    const int fast = b.state("gn+1.a0.ex.exx");
    b.component("a3", {a3}, Status::Realized);
    b.component("a2a1", {a2, a1}, Status::Dormant);
    b.component("meta", {meta}, Status::Dormant);
    b.component("fast", {fast}, Status::Dormant);
    b.gap(a3, a2, gamma_pump);
    b.continuous(a2, a1, g);
    b.gap(a2, meta, gamma_meta);   // long-lived emission off the upper member
    b.gap(a1, fast, gamma_fast);   // short-lived decay off the lower member
    b.amplitude(a3, 1.0);

    ScenarioSpec spec{"laser-cycle", b.take(), {}};
    const bool second = gamma_meta != 0.0 || gamma_fast != 0.0;
    const int hits = gamma_pump == 0.0 ? 0 : (second ? 2 : 1);
    spec.meta.min_events = spec.meta.max_events = hits;
    double min_pos = 0.0;
    for (double gg : {gamma_pump, gamma_meta, gamma_fast})
        if (gg != 0.0) min_pos = min_pos == 0.0 ? std::abs(gg) : std::min(min_pos, std::abs(gg));
    spec.meta.suggested_t_max = horizon(min_pos, 2);
    spec.meta.allowed_sequences = {{"a2a1", "meta"}, {"a2a1", "fast"}};
    return spec;
}

ScenarioSpec neutron_decay(int sites, double hop, double g_decay, double center, double width,
                           double momentum) {
    if (sites < 2) throw std::invalid_argument("neutron_decay requires sites >= 2");
    if (center < 0.0) center = sites / 4.0;
    if (width < 0.0) width = sites / 8.0;
    if (momentum < 0.0) momentum = std::numbers::pi / 2.0;

    GraphBuilder b;
    std::vector<int> lattice(sites);
    for (int j = 0; j < sites; ++j)
        lattice[j] = b.state("n" + std::to_string(j), {"site:" + std::to_string(j)});
    b.component("n", lattice, Status::Realized);
    std::vector<std::vector<std::string>> sequences;
    for (int j = 0; j < sites; ++j) {
        const std::string label = "epv" + std::to_string(j);
        const int d = b.state(label, {"site:" + std::to_string(j)});
        b.component(label, {d}, Status::Dormant);
        b.gap(lattice[j], d, g_decay);
        sequences.push_back({label});
    }
    for (int j = 0; j + 1 < sites; ++j) b.continuous(lattice[j], lattice[j + 1], hop);

    // packet: discrete Gaussian with a momentum phase, normalized
    std::vector<Complex> w(sites);
    double norm = 0.0;
    for (int j = 0; j < sites; ++j) {
        const double envelope =
            width > 0.0 ? std::exp(-(j - center) * (j - center) / (4.0 * width * width))
                        : (j == static_cast<int>(std::lround(center)) ? 1.0 : 0.0);
        w[j] = std::polar(envelope, momentum * j);
        norm += envelope * envelope;
    }
    norm = std::sqrt(norm);
    for (int j = 0; j < sites; ++j) b.amplitude(lattice[j], w[j] / norm);

    ScenarioSpec spec{"neutron-decay", b.take(), {}};
    spec.meta.min_events = spec.meta.max_events = (g_decay != 0.0) ? 1 : 0;
    spec.meta.suggested_t_max = horizon(g_decay);
    spec.meta.allowed_sequences = std::move(sequences);
    spec.meta.support_tag_prefix = "site:";
    return spec;
}

ScenarioSpec localization(int bubbles, double g, double gamma, std::vector<double> weights) {
    if (bubbles < 1) throw std::invalid_argument("localization requires at least one bubble");
    if (weights.empty()) {
        weights.resize(bubbles);
        for (int k = 0; k < bubbles; ++k) weights[k] = std::sqrt(static_cast<double>(k + 1));
    }
    if (static_cast<int>(weights.size()) != bubbles)
        throw std::invalid_argument("localization: need one weight per bubble");
    double norm = 0.0;
    for (double w : weights) norm += w * w;
    norm = std::sqrt(norm);

    GraphBuilder b;
    std::vector<std::vector<std::string>> sequences;
    for (int k = 0; k < bubbles; ++k) {
        const std::string tag = "bubble:" + std::to_string(k);
        const int ground = b.state("a" + std::to_string(k), {tag});
        const int excited = b.state("a" + std::to_string(k) + "*", {tag});
        const int emitted = b.state("a" + std::to_string(k) + ".g" + std::to_string(k), {tag});
        b.component("bubble" + std::to_string(k), {ground, excited}, Status::Realized);
        const std::string emit_label = "emit" + std::to_string(k);
        b.component(emit_label, {emitted}, Status::Dormant);
        b.continuous(ground, excited, g);
        b.gap(excited, emitted, gamma);
        b.amplitude(ground, weights[k] / norm);
        sequences.push_back({emit_label});
    }

    ScenarioSpec spec{"localization", b.take(), {}};
    spec.meta.min_events = spec.meta.max_events = (gamma != 0.0 && g != 0.0) ? 1 : 0;
    spec.meta.suggested_t_max = gamma != 0.0 ? 60.0 / (gamma * gamma) : 50.0;
    spec.meta.allowed_sequences = std::move(sequences);
    spec.meta.support_tag_prefix = "bubble:";
    return spec;
}

namespace {

double param_or(const std::map<std::string, double>& params, const std::string& name,
                double fallback) {
    auto it = params.find(name);
    return it == params.end() ? fallback : it->second;
}

int int_param(const std::map<std::string, double>& params, const std::string& name, int fallback) {
    const double v = param_or(params, name, fallback);
    const int i = static_cast<int>(std::lround(v));
    if (std::abs(v - i) > 1e-9)
        throw std::invalid_argument("parameter '" + name + "' must be an integer");
    return i;
}

} // namespace

const std::vector<ScenarioInfo>& scenario_registry() {
    static const std::vector<ScenarioInfo> registry = {
        {"detector-capture", "one capture gap, one hit", {{"g", 1.0, "gap coupling"}}},
        {"series-counter",
         "serial counter chain, hits in strict order",
         {{"n", 3.0, "number of gaps"}, {"g", 1.0, "uniform gap coupling"}}},
        {"parallel-branch",
         "two decay routes closing on a final state",
         {{"gR", 1.0, "right gap"}, {"gL", 2.0, "left gap"}, {"gF", 1.0, "final gap"}}},
        {"observer-chain",
         "capture gap into a window state, then continuous transport to the display",
         {{"g", 1.0, "capture gap"}, {"hop", 1.0, "chain hopping"}, {"len", 3.0, "chain length"}}},
        {"multi-sequence",
         "three branches then two: six possible sequences",
         {{"g1a", 1.0, "first-level gap a"},
          {"g1b", 1.0, "first-level gap b"},
          {"g1c", 1.0, "first-level gap c"},
          {"g2a", 1.0, "second-level gap a"},
          {"g2b", 1.0, "second-level gap b"}}},
        {"rabi-absorption",
         "driven two-level atom starting in the ground state, spontaneous emission gap",
         {{"g", 1.0, "drive coupling"}, {"gamma", 0.25, "emission gap"}}},
        {"rabi-emission",
         "driven two-level atom starting excited, spontaneous emission gap",
         {{"g", 1.0, "drive coupling"}, {"gamma", 0.25, "emission gap"}}},
        {"laser-cycle",
         "pump gap, stimulated 2<->1 block, metastable vs fast decay race",
         {{"g", 1.0, "stimulated coupling"},
          {"gammaPump", 1.0, "pump gap"},
          {"gammaMeta", 0.3, "metastable emission gap"},
          {"gammaFast", 1.5, "fast decay gap"}}},
        {"neutron-decay",
         "hopping packet with a site-local decay gap at every site",
         {{"sites", 16.0, "lattice sites"},
          {"hop", 1.0, "hopping amplitude"},
          {"gDecay", 0.35, "decay gap"},
          {"center", -1.0, "packet center (default sites/4)"},
          {"width", -1.0, "packet width (default sites/8)"},
          {"momentum", -1.0, "packet phase gradient (default pi/2)"}}},
        {"localization",
         "decoherent bubbles, each a driven block with its own emission gap",
         {{"bubbles", 8.0, "bubble count"},
          {"g", 1.0, "drive coupling"},
          {"gamma", 0.3, "emission gap"}}},
    };
    return registry;
}

ScenarioSpec build_scenario(const std::string& id, const std::map<std::string, double>& params) {
    const ScenarioInfo* info = nullptr;
    for (const auto& s : scenario_registry())
        if (s.id == id) info = &s;
    if (!info) throw std::invalid_argument("unknown scenario id '" + id + "'");
    for (const auto& [name, value] : params) {
        const bool known = std::any_of(info->params.begin(), info->params.end(),
                                       [&](const ScenarioParam& p) { return p.name == name; });
        if (!known)
            throw std::invalid_argument("scenario '" + id + "' has no parameter '" + name + "'");
    }

    if (id == "detector-capture") return detector_capture(param_or(params, "g", 1.0));
    if (id == "series-counter")
        return series_counter(int_param(params, "n", 3), {param_or(params, "g", 1.0)});
    if (id == "parallel-branch")
        return parallel_branch(param_or(params, "gR", 1.0), param_or(params, "gL", 2.0),
                               param_or(params, "gF", 1.0));
    if (id == "observer-chain")
        return observer_chain(param_or(params, "g", 1.0), param_or(params, "hop", 1.0),
                              int_param(params, "len", 3));
    if (id == "multi-sequence")
        return multi_sequence({param_or(params, "g1a", 1.0), param_or(params, "g1b", 1.0),
                               param_or(params, "g1c", 1.0)},
                              {param_or(params, "g2a", 1.0), param_or(params, "g2b", 1.0)});
    if (id == "rabi-absorption")
        return rabi_absorption(param_or(params, "g", 1.0), param_or(params, "gamma", 0.25));
    if (id == "rabi-emission")
        return rabi_emission(param_or(params, "g", 1.0), param_or(params, "gamma", 0.25));
    if (id == "laser-cycle")
        return laser_cycle(param_or(params, "g", 1.0), param_or(params, "gammaPump", 1.0),
                           param_or(params, "gammaMeta", 0.3), param_or(params, "gammaFast", 1.5));
    if (id == "neutron-decay")
        return neutron_decay(int_param(params, "sites", 16), param_or(params, "hop", 1.0),
                             param_or(params, "gDecay", 0.35), param_or(params, "center", -1.0),
                             param_or(params, "width", -1.0), param_or(params, "momentum", -1.0));
    if (id == "localization")
        return localization(int_param(params, "bubbles", 8), param_or(params, "g", 1.0),
                            param_or(params, "gamma", 0.3));
    throw std::logic_error("scenario id registered but not dispatched: " + id);
}

// ---- file format ----

namespace {

using nlohmann::ordered_json;

void require_keys(const nlohmann::json& obj, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional, const std::string& where) {
    for (const char* k : required)
        if (!obj.contains(k))
            throw ScenarioFormatError("missing key '" + std::string(k) + "' in " + where);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const std::string& key = it.key();
        const bool known =
            std::any_of(required.begin(), required.end(), [&](const char* k) { return key == k; }) ||
            std::any_of(optional.begin(), optional.end(), [&](const char* k) { return key == k; });
        if (!known) throw ScenarioFormatError("unknown key '" + key + "' in " + where);
    }
}

} // namespace

std::string graph_to_json(const SystemGraph& graph) {
    ordered_json root;
    auto& basis = root["basis"] = ordered_json::array();
    for (const auto& b : graph.basis) {
        ordered_json jb;
        jb["index"] = b.index;
        jb["label"] = b.label;
        jb["tags"] = b.tags;
        basis.push_back(std::move(jb));
    }
    auto& comps = root["components"] = ordered_json::array();
    for (const auto& c : graph.components) {
        ordered_json jc;
        jc["id"] = c.id;
        jc["label"] = c.label;
        jc["members"] = c.members;
        jc["initialStatus"] = status_name(c.initial_status);
        comps.push_back(std::move(jc));
    }
    root["diag"] = graph.diag;
    auto& cpl = root["couplings"] = ordered_json::array();
    for (const auto& c : graph.couplings) {
        ordered_json jc;
        jc["from"] = c.from;
        jc["to"] = c.to;
        jc["re"] = c.value.real();
        jc["im"] = c.value.imag();
        jc["kind"] = c.kind == CouplingKind::Gap ? "gap" : "continuous";
        cpl.push_back(std::move(jc));
    }
    auto& amps = root["initialAmplitudes"] = ordered_json::array();
    for (std::size_t i = 0; i < graph.initial_amplitudes.size(); ++i) {
        const Complex& a = graph.initial_amplitudes[i];
        if (a == Complex{0.0, 0.0}) continue;
        ordered_json ja;
        ja["index"] = static_cast<int>(i);
        ja["re"] = a.real();
        ja["im"] = a.imag();
        amps.push_back(std::move(ja));
    }
    return root.dump(2) + "\n";
}

SystemGraph graph_from_json(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioFormatError(std::string("scenario file is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ScenarioFormatError("scenario file must hold a JSON object");
    require_keys(root, {"basis", "components", "diag", "couplings", "initialAmplitudes"}, {},
                 "scenario");

    SystemGraph g;
    for (const auto& jb : root.at("basis")) {
        require_keys(jb, {"index", "label"}, {"tags"}, "basis state");
        BasisState b;
        b.index = jb.at("index").get<int>();
        b.label = jb.at("label").get<std::string>();
        if (jb.contains("tags"))
            for (const auto& t : jb.at("tags")) b.tags.insert(t.get<std::string>());
        g.basis.push_back(std::move(b));
    }
    // normalize storage order to index order; validation reports duplicates
    std::stable_sort(g.basis.begin(), g.basis.end(),
                     [](const BasisState& a, const BasisState& b) { return a.index < b.index; });
    for (const auto& jc : root.at("components")) {
        require_keys(jc, {"id", "label", "members", "initialStatus"}, {}, "component");
        Component c;
        c.id = jc.at("id").get<int>();
        c.label = jc.at("label").get<std::string>();
        c.members = jc.at("members").get<std::vector<int>>();
        c.initial_status = status_from_name(jc.at("initialStatus").get<std::string>());
        g.components.push_back(std::move(c));
    }
    g.diag = root.at("diag").get<std::vector<double>>();
    for (const auto& jc : root.at("couplings")) {
        require_keys(jc, {"from", "to", "re", "im", "kind"}, {}, "coupling");
        Coupling c;
        c.from = jc.at("from").get<int>();
        c.to = jc.at("to").get<int>();
        c.value = Complex{jc.at("re").get<double>(), jc.at("im").get<double>()};
        const std::string kind = jc.at("kind").get<std::string>();
        if (kind == "gap")
            c.kind = CouplingKind::Gap;
        else if (kind == "continuous")
            c.kind = CouplingKind::Continuous;
        else
            throw ScenarioFormatError("unknown coupling kind '" + kind + "'");
        g.couplings.push_back(c);
    }
    g.initial_amplitudes.assign(g.basis.size(), Complex{0.0, 0.0});
    for (const auto& ja : root.at("initialAmplitudes")) {
        require_keys(ja, {"index", "re", "im"}, {}, "initial amplitude");
        const int idx = ja.at("index").get<int>();
        if (idx < 0 || idx >= static_cast<int>(g.initial_amplitudes.size()))
            throw ScenarioFormatError("initial amplitude index " + std::to_string(idx) +
                                      " out of range");
        g.initial_amplitudes[idx] = Complex{ja.at("re").get<double>(), ja.at("im").get<double>()};
    }
    return g;
}

} // namespace nrulesim
