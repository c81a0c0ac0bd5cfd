#pragma once

#include "nrulesim/graph.hpp"
#include "nrulesim/scenario.hpp"

#include <map>
#include <string>
#include <vector>

namespace nrulesim::oracle {

class OracleError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense Hermitian eigensolver (cyclic Jacobi with phase absorption).
// Column k of `vectors` (entries vectors[i + n*k]) is the k-th eigenvector.
struct EigenSystem {
    int n = 0;
    std::vector<double> values;
    std::vector<Complex> vectors;
};
EigenSystem hermitian_eigensystem(std::vector<Complex> matrix, int n);

// Evolution under the full Hermitian master Hamiltonian (every coupling,
// every diagonal, no truncation), via eigendecomposition; exact up to the
// eigensolver, with no shared machinery with the stepping engine.
std::vector<Complex> unitary_evolve(const SystemGraph& graph, std::vector<Complex> amp, double t);
std::vector<Complex> unitary_evolve(const SystemGraph& graph, double t);   // from normalized initial state

// First-hit channel probabilities of one truncated stage, by quadrature on
// the exactly-evolved realized block:
//   P_K = int_0^T lambda_K(t) exp(-int_0^t lambda_total) dt
struct RaceResult {
    std::map<std::string, double> probabilities;   // channel component label -> probability
    double no_hit = 0.0;
    double error_estimate = 0.0;
};
RaceResult race_quadrature(const SystemGraph& graph, const std::vector<Status>& statuses,
                           const std::vector<Complex>& amp, double t_max, int n_steps = 1 << 14);

// From the scenario's initial stage.
RaceResult race_quadrature(const SystemGraph& graph, double t_max, int n_steps = 1 << 14);

// Stage-composed probabilities over whole hit sequences (keys are label
// sequences joined with '>'); a truncated sequence's leftover mass is
// reported under its own prefix key.
struct SequenceResult {
    std::map<std::string, double> probabilities;
    double error_estimate = 0.0;
};
SequenceResult sequence_probabilities(const SystemGraph& graph, double stage_t_max,
                                      int n_steps = 1 << 14, int max_depth = 8);

// Registered analytic fixtures.
struct OracleResult {
    std::string mode;
    std::map<std::string, double> values;
    double error_estimate = 0.0;
};
OracleResult closed_forms(const std::string& case_id, const std::map<std::string, double>& params);

inline double single_gap_survival(double g, double t) { return 1.0 / (1.0 + g * g * t * t); }

std::string sequence_key(const std::vector<std::string>& labels);

} // namespace nrulesim::oracle
