#pragma once

#include "nrulesim/reduction.hpp"
#include "nrulesim/scenario.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace nrulesim {

struct EnsembleOptions {
    long trials = 1;
    long first_trial = 0;          // stream ids run first_trial .. first_trial+trials-1
    std::uint64_t master_seed = 1;
    int workers = 0;               // <= 0: NRULE_SIM_THREADS or hardware concurrency
    double t_max = 0.0;            // <= 0: scenario meta suggestion
    CollapsePolicy policy = CollapsePolicy::ZeroNonChosen;
    IntegratorOptions integrator;
    double histogram_bin = 0.25;
    int histogram_max_bins = 400;
    bool keep_records = false;     // retain raw trajectory records in the result
};

struct InvariantFailure {
    long trial = -1;
    std::string kind;
    std::string detail;
};

struct SlotHistogram {
    int slot = 0;                  // which hit of the trajectory
    double bin_width = 0.25;
    std::vector<long> bins;
    long overflow = 0;
    long missing = 0;              // trials without this slot

    long total() const {
        long t = overflow + missing;
        for (long b : bins) t += b;
        return t;
    }
};

struct OracleComparison {
    bool compared = false;
    double chi_square = 0.0;
    int dof = 0;
    double p_value = 1.0;
    bool pass = true;
    std::map<std::string, double> oracle_p;
    std::map<std::string, double> z;     // per-outcome z-score vs binomial
};

struct OutcomeStats {
    std::string scenario;
    long trials = 0;
    std::uint64_t master_seed = 0;
    double t_max = 0.0;
    CollapsePolicy policy = CollapsePolicy::ZeroNonChosen;
    double tol = 0.0;
    std::map<std::string, long> outcome_counts;   // sequence key -> count
    std::vector<SlotHistogram> hit_time_histograms;
    std::vector<InvariantFailure> invariant_failures;
    OracleComparison comparison;
    std::vector<TrajectoryRecord> records;        // only when keep_records
};

// N independent trajectories on per-trial streams; aggregation runs in
// trial order so the result is identical for any worker count.
OutcomeStats run_ensemble(const ScenarioSpec& scenario, const EnsembleOptions& opts);

std::vector<InvariantFailure> check_invariants(const std::vector<TrajectoryRecord>& records,
                                               const SystemGraph& graph, const ScenarioMeta& meta);

// Per-outcome z-scores and a chi-square test against oracle probabilities
// (bins with expected count below 5 are pooled).
void compare_to_oracle(OutcomeStats& stats, const std::map<std::string, double>& oracle_probs,
                       double significance = 1e-3);

double chi_square_p_value(double chi_square, int dof);

int resolve_workers(int requested);

std::string stats_to_json(const OutcomeStats& stats);
std::string stats_to_csv(const OutcomeStats& stats);

} // namespace nrulesim
