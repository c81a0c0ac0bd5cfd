#include "nrulesim/graph.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace nrulesim {

const char* status_name(Status s) {
    switch (s) {
        case Status::Realized: return "realized";
        case Status::Ready: return "ready";
        case Status::Dormant: return "dormant";
        case Status::Phantom: return "phantom";
    }
    return "?";
}

Status status_from_name(const std::string& name) {
    if (name == "realized") return Status::Realized;
    if (name == "ready") return Status::Ready;
    if (name == "dormant") return Status::Dormant;
    if (name == "phantom") return Status::Phantom;
    throw std::invalid_argument("unknown component status '" + name + "'");
}

int SystemGraph::component_of(int basis_index) const {
    for (const auto& c : components) {
        if (std::find(c.members.begin(), c.members.end(), basis_index) != c.members.end())
            return c.id;
    }
    return -1;
}

const Component* SystemGraph::find_component(int id) const {
    for (const auto& c : components)
        if (c.id == id) return &c;
    return nullptr;
}

const Component* SystemGraph::find_component_by_label(const std::string& label) const {
    for (const auto& c : components)
        if (c.label == label) return &c;
    return nullptr;
}

std::vector<Status> SystemGraph::initial_statuses() const {
    std::vector<Status> s;
    s.reserve(components.size());
    for (const auto& c : components) s.push_back(c.initial_status);
    return s;
}

std::string ValidationReport::to_string() const {
    if (ok()) return "pass";
    std::ostringstream os;
    for (const auto& v : violations) os << v.kind << ": " << v.detail << "\n";
    return os.str();
}

namespace {

int component_position(const SystemGraph& g, int component_id) {
    for (std::size_t i = 0; i < g.components.size(); ++i)
        if (g.components[i].id == component_id) return static_cast<int>(i);
    return -1;
}

} // namespace

std::vector<Status> classify(const SystemGraph& graph, std::vector<Status> statuses) {
    if (statuses.size() != graph.components.size())
        throw std::invalid_argument("status map size does not match component count");
    bool any_realized = false;
    for (Status s : statuses) any_realized |= (s == Status::Realized);
    if (!any_realized)
        throw std::invalid_argument("classify requires at least one realized component");

    // basis index -> component position for quick lookups
    std::vector<int> owner(graph.dimension(), -1);
    for (std::size_t ci = 0; ci < graph.components.size(); ++ci)
        for (int m : graph.components[ci].members)
            if (m >= 0 && m < graph.dimension()) owner[m] = static_cast<int>(ci);

    for (const auto& cpl : graph.couplings) {
        if (cpl.kind != CouplingKind::Gap) continue;
        if (cpl.from < 0 || cpl.from >= graph.dimension()) continue;
        if (cpl.to < 0 || cpl.to >= graph.dimension()) continue;
        const int src = owner[cpl.from];
        const int dst = owner[cpl.to];
        if (src < 0 || dst < 0 || src == dst) continue;
        if (statuses[src] == Status::Realized && statuses[dst] == Status::Dormant)
            statuses[dst] = Status::Ready;
    }
    return statuses;
}

ValidationReport validate(const SystemGraph& graph) {
    ValidationReport report;
    auto fail = [&](const std::string& kind, const std::string& detail) {
        report.violations.push_back({kind, detail});
    };

    const int dim = graph.dimension();

    // Basis indices dense 0..D-1 and unique.
    {
        std::vector<int> seen(dim, 0);
        for (const auto& b : graph.basis) {
            if (b.index < 0 || b.index >= dim)
                fail("basis-index-range", "basis state '" + b.label + "' has index " + std::to_string(b.index));
            else if (seen[b.index]++)
                fail("basis-index-duplicate", "index " + std::to_string(b.index) + " appears twice");
        }
    }
    if (static_cast<int>(graph.diag.size()) != dim)
        fail("diag-size", "diag has " + std::to_string(graph.diag.size()) + " entries for " +
                              std::to_string(dim) + " basis states");
    if (static_cast<int>(graph.initial_amplitudes.size()) != dim)
        fail("amplitude-size", "initialAmplitudes has " + std::to_string(graph.initial_amplitudes.size()) +
                                   " entries for " + std::to_string(dim) + " basis states");

    // Components disjoint and covering; ids unique.
    std::vector<int> owner(dim, -1);
    {
        std::set<int> ids;
        for (const auto& c : graph.components) {
            if (!ids.insert(c.id).second)
                fail("component-id-duplicate", "component id " + std::to_string(c.id) + " appears twice");
            for (int m : c.members) {
                if (m < 0 || m >= dim) {
                    fail("member-index-range", "component '" + c.label + "' lists basis index " + std::to_string(m));
                    continue;
                }
                if (owner[m] >= 0)
                    fail("overlapping-membership", "basis index " + std::to_string(m) +
                                                       " belongs to components " + std::to_string(owner[m]) +
                                                       " and " + std::to_string(c.id));
                owner[m] = c.id;
            }
        }
        for (int i = 0; i < dim; ++i)
            if (owner[i] < 0)
                fail("uncovered-state", "basis index " + std::to_string(i) + " belongs to no component");
    }

    // Hermiticity of the continuous block: declared entries between an
    // ordered pair must be mutually conjugate; self-couplings must be real.
    {
        std::map<std::pair<int, int>, Complex> cont;
        for (const auto& cpl : graph.couplings) {
            if (cpl.from < 0 || cpl.from >= dim || cpl.to < 0 || cpl.to >= dim) {
                fail("coupling-index-range", "coupling " + std::to_string(cpl.from) + "->" + std::to_string(cpl.to));
                continue;
            }
            if (cpl.kind != CouplingKind::Continuous) continue;
            if (cpl.from == cpl.to && cpl.value.imag() != 0.0)
                fail("non-hermitian", "self-coupling on index " + std::to_string(cpl.from) +
                                          " has nonzero imaginary part");
            auto key = std::make_pair(cpl.to, cpl.from);   // H[to][from] = value
            auto [it, inserted] = cont.emplace(key, cpl.value);
            if (!inserted && it->second != cpl.value)
                fail("non-hermitian", "conflicting declarations for H[" + std::to_string(key.first) + "][" +
                                          std::to_string(key.second) + "]");
        }
        for (const auto& [key, v] : cont) {
            auto mirror = cont.find(std::make_pair(key.second, key.first));
            if (mirror != cont.end() && mirror->second != std::conj(v))
                fail("non-hermitian", "H[" + std::to_string(key.first) + "][" + std::to_string(key.second) +
                                          "] is not the conjugate of its mirror entry");
        }
    }

    // Gap couplings must cross component boundaries.
    for (const auto& cpl : graph.couplings) {
        if (cpl.kind != CouplingKind::Gap) continue;
        if (cpl.from < 0 || cpl.from >= dim || cpl.to < 0 || cpl.to >= dim) continue;
        if (owner[cpl.from] >= 0 && owner[cpl.from] == owner[cpl.to])
            fail("gap-internal", "gap " + std::to_string(cpl.from) + "->" + std::to_string(cpl.to) +
                                     " stays inside component " + std::to_string(owner[cpl.from]));
    }

    // Initial amplitude only on initially realized members.
    if (static_cast<int>(graph.initial_amplitudes.size()) == dim) {
        for (int i = 0; i < dim; ++i) {
            if (graph.initial_amplitudes[i] == Complex{0.0, 0.0}) continue;
            const Component* c = owner[i] >= 0 ? graph.find_component(owner[i]) : nullptr;
            if (!c || c->initial_status != Status::Realized)
                fail("amplitude-on-nonrealized",
                     "basis index " + std::to_string(i) + " carries initial amplitude but is not realized");
        }
    }

    // Reachability: directed along gaps, both ways along continuous couplings,
    // starting from initially realized members.
    if (dim > 0) {
        std::vector<std::vector<int>> adj(dim);
        for (const auto& cpl : graph.couplings) {
            if (cpl.from < 0 || cpl.from >= dim || cpl.to < 0 || cpl.to >= dim) continue;
            adj[cpl.from].push_back(cpl.to);
            if (cpl.kind == CouplingKind::Continuous) adj[cpl.to].push_back(cpl.from);
        }
        std::vector<char> reached(dim, 0);
        std::queue<int> frontier;
        for (const auto& c : graph.components)
            if (c.initial_status == Status::Realized)
                for (int m : c.members)
                    if (m >= 0 && m < dim && !reached[m]) {
                        reached[m] = 1;
                        frontier.push(m);
                    }
        while (!frontier.empty()) {
            int u = frontier.front();
            frontier.pop();
            for (int v : adj[u])
                if (!reached[v]) {
                    reached[v] = 1;
                    frontier.push(v);
                }
        }
        for (const auto& c : graph.components) {
            bool any = false;
            for (int m : c.members)
                if (m >= 0 && m < dim && reached[m]) any = true;
            if (!any && c.initial_status != Status::Realized)
                fail("unreachable-component", "component '" + c.label + "' cannot receive current");
        }
    }

    // Declared Ready marks must agree with the classifier: demote them all to
    // Dormant, re-classify, and require each to come back as Ready.
    {
        bool any_realized = false;
        for (const auto& c : graph.components) any_realized |= (c.initial_status == Status::Realized);
        if (any_realized) {
            std::vector<Status> reset = graph.initial_statuses();
            for (auto& s : reset)
                if (s == Status::Ready) s = Status::Dormant;
            std::vector<Status> canon = classify(graph, reset);
            for (std::size_t i = 0; i < graph.components.size(); ++i) {
                if (graph.components[i].initial_status == Status::Ready && canon[i] != Status::Ready)
                    fail("ready-not-adjacent-to-realized",
                         "component '" + graph.components[i].label + "' is marked ready but no gap feeds it");
            }

            // a ready component must stay inert in the effective generator:
            // no continuous coupling may join the first stage's realized set
            // to a component the truncation excludes
            std::vector<int> pos(dim, -1);
            for (std::size_t ci = 0; ci < graph.components.size(); ++ci)
                for (int m : graph.components[ci].members)
                    if (m >= 0 && m < dim) pos[m] = static_cast<int>(ci);
            for (const auto& cpl : graph.couplings) {
                if (cpl.kind != CouplingKind::Continuous) continue;
                if (cpl.from < 0 || cpl.from >= dim || cpl.to < 0 || cpl.to >= dim) continue;
                if (pos[cpl.from] < 0 || pos[cpl.to] < 0) continue;
                const Status a = canon[pos[cpl.from]];
                const Status b = canon[pos[cpl.to]];
                if ((a == Status::Realized) != (b == Status::Realized))
                    fail("ready-component-not-inert",
                         "continuous coupling " + std::to_string(cpl.from) + "->" +
                             std::to_string(cpl.to) + " leaks out of the realized set");
            }
        } else {
            fail("no-realized-component", "no component is initially realized");
        }
    }

    return report;
}

} // namespace nrulesim
