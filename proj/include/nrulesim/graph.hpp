#pragma once

#include <complex>
#include <set>
#include <string>
#include <vector>

namespace nrulesim {

using Complex = std::complex<double>;

// Status of a component within the current solution.
//   Realized: evolves under its own Hamiltonian block.
//   Ready:    reachable across a gap; accumulates inflow, never evolves itself.
//   Dormant:  beyond the next gap; excluded from the active generator.
//   Phantom:  spent after a hit; no further dynamical consequence.
enum class Status { Realized, Ready, Dormant, Phantom };

const char* status_name(Status s);
Status status_from_name(const std::string& name);

struct BasisState {
    int index = 0;
    std::string label;
    std::set<std::string> tags;
};

struct Component {
    int id = 0;
    std::string label;
    std::vector<int> members;      // basis indices, sorted
    Status initial_status = Status::Dormant;
};

// Declared coupling kind. A Gap carries the irreversible + discontinuous
// attributes and must cross a component boundary; Continuous couplings
// (with the diagonal energies) form the Hermitian master Hamiltonian.
enum class CouplingKind { Continuous, Gap };

struct Coupling {
    int from = 0;
    int to = 0;
    Complex value;                 // angular frequency, hbar = 1
    CouplingKind kind = CouplingKind::Continuous;
};

// Static topology of a scenario: basis states partitioned into components,
// diagonal energies, couplings, and the initial boundary conditions.
struct SystemGraph {
    std::vector<BasisState> basis;
    std::vector<Component> components;
    std::vector<double> diag;              // one real energy per basis state
    std::vector<Coupling> couplings;
    std::vector<Complex> initial_amplitudes;

    int dimension() const { return static_cast<int>(basis.size()); }
    int component_count() const { return static_cast<int>(components.size()); }

    // Component id owning a basis index, -1 if unowned.
    int component_of(int basis_index) const;

    const Component* find_component(int id) const;
    const Component* find_component_by_label(const std::string& label) const;

    std::vector<Status> initial_statuses() const;
};

struct Violation {
    std::string kind;    // stable machine-readable tag
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const;
};

// Structural validation: Hermiticity of the continuous block, disjoint
// covering components, gaps crossing boundaries, amplitudes confined to
// initially realized components, reachability, and declared Ready marks
// consistent with classification.
ValidationReport validate(const SystemGraph& graph);

// Promotes every Dormant component that receives a gap from some Realized
// component to Ready; everything else is left alone. Realized and Phantom
// are fixed points. Throws std::invalid_argument if nothing is Realized.
std::vector<Status> classify(const SystemGraph& graph, std::vector<Status> statuses);

} // namespace nrulesim
