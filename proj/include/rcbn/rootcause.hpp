#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcbn/dataset.hpp"
#include "rcbn/structure.hpp"
#include "rcbn/util.hpp"

namespace rcbn {

struct GaConfig {
    int K = 20;
    int max_gen = 100;
    int patience = 10;
    double plateau = 1e-6;
    /// Characteristic state number; 0 means 3 x the label's cardinality.
    int tau = 0;
    double C = 1e-3;
    double mutation_rate = 0.05;
    std::uint64_t seed = 0;
    /// Score every subset of the label's ancestors instead of running the GA.
    bool exhaustive = false;
    int jobs = 1;

    void validate() const;
    /// Copy with tau resolved for the given label.
    GaConfig resolved(const Dataset& ds, VarId label) const;
};

/// Sum of the cardinalities of the nodes in e.
int state_count(const Dataset& ds, const VarSet& e);

/// C * max(0, (state_count(e) - tau) / tau)^2. cfg.tau must be resolved (> 0).
double regularization(const VarSet& e, const GaConfig& cfg, const Dataset& ds);

/// Mean over Y in e of U(Y, parents_global(Y) ∩ e); 0 for empty e.
double local_term(const Dataset& ds, const VarSet& e, const Dag& global);

struct FitnessTerms {
    double u = 0.0;
    double l = 0.0;
    double r = 0.0;
    double total() const { return u + l - r; }
};

FitnessTerms fitness_terms(const Dataset& ds, VarId label, const VarSet& e, const Dag& global,
                           const GaConfig& cfg);
double fitness(const Dataset& ds, VarId label, const VarSet& e, const Dag& global,
               const GaConfig& cfg);

struct GenerationRecord {
    int generation = 0;
    double best = 0.0;
    double runner_up = 0.0;
    int stagnation = 0;
    std::size_t evaluated = 0;
};

struct ReducedModel {
    Dag dag;
    VarId label = -1;
    VarSet selected;
    double fitness = 0.0;
    FitnessTerms terms;
    GaConfig config;
    std::string provenance;
    std::vector<GenerationRecord> history;
};

ReducedModel extract_root_cause(const Dataset& ds, const Dag& global, VarId label,
                                const GaConfig& cfg);

/// Best subset of the label's ancestors by enumeration. Throws UsageError above 20 ancestors.
ReducedModel exhaustive_root_cause(const Dataset& ds, const Dag& global, VarId label,
                                   const GaConfig& cfg);

}  // namespace rcbn
