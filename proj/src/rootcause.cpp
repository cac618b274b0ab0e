#include "rcbn/rootcause.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "rcbn/infoscore.hpp"

namespace rcbn {

void GaConfig::validate() const {
    if (K < 2) {
        throw UsageError("GA: K must be >= 2");
    }
    if (max_gen < 1) {
        throw UsageError("GA: max_gen must be >= 1");
    }
    if (patience < 1) {
        throw UsageError("GA: patience must be >= 1");
    }
    if (!(plateau >= 0.0)) {
        throw UsageError("GA: plateau must be >= 0");
    }
    if (tau < 0) {
        throw UsageError("GA: tau must be >= 1 (or 0 for the default)");
    }
    if (!(C >= 0.0)) {
        throw UsageError("GA: C must be >= 0");
    }
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
        throw UsageError("GA: mutation rate must lie in [0, 1]");
    }
}

GaConfig GaConfig::resolved(const Dataset& ds, VarId label) const {
    GaConfig out = *this;
    if (out.tau == 0) {
        out.tau = 3 * static_cast<int>(ds.cardinality(label));
    }
    return out;
}

int state_count(const Dataset& ds, const VarSet& e) {
    int total = 0;
    for (VarId v : e) {
        total += static_cast<int>(ds.cardinality(v));
    }
    return total;
}

double regularization(const VarSet& e, const GaConfig& cfg, const Dataset& ds) {
    if (cfg.tau < 1) {
        throw UsageError("regularization: tau must be resolved to >= 1");
    }
    const double tau = cfg.tau;
    const double hinge = std::max(0.0, (state_count(ds, e) - tau) / tau);
    return cfg.C * hinge * hinge;
}

double local_term(const Dataset& ds, const VarSet& e, const Dag& global) {
    if (e.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (VarId y : e) {
        const VarSet kept = set_intersection(global.parents_of(y), e);
        total += uncertainty_coefficient(ds, y, kept);
    }
    return total / static_cast<double>(e.size());
}

FitnessTerms fitness_terms(const Dataset& ds, VarId label, const VarSet& e, const Dag& global,
                           const GaConfig& cfg) {
    FitnessTerms t;
    if (e.empty()) {
        return t;
    }
    t.u = uncertainty_coefficient(ds, label, e);
    t.l = local_term(ds, e, global);
    t.r = regularization(e, cfg, ds);
    return t;
}

double fitness(const Dataset& ds, VarId label, const VarSet& e, const Dag& global,
               const GaConfig& cfg) {
    return fitness_terms(ds, label, e, global, cfg).total();
}

namespace {

using Mask = std::vector<std::uint8_t>;

struct Individual {
    Mask mask;
    double fitness = 0.0;
};

bool fitter(const Individual& a, const Individual& b) {
    if (a.fitness != b.fitness) {
        return a.fitness > b.fitness;
    }
    return a.mask < b.mask;
}

VarSet decode(const Mask& mask, const VarSet& genes) {
    VarSet e;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) {
            e.push_back(genes[i]);
        }
    }
    return e;
}

class FitnessMemo {
public:
    FitnessMemo(const Dataset& ds, const Dag& global, VarId label, const GaConfig& cfg,
                const VarSet& genes)
        : ds_(ds), global_(global), label_(label), cfg_(cfg), genes_(genes) {}

    /// Fills in fitness for every individual, evaluating unseen masks in parallel.
    void score(std::vector<Individual>& pop) {
        std::vector<Mask> todo;
        for (const auto& ind : pop) {
            if (!memo_.count(ind.mask) &&
                std::find(todo.begin(), todo.end(), ind.mask) == todo.end()) {
                todo.push_back(ind.mask);
            }
        }
        std::vector<double> values(todo.size());
        parallel_for(todo.size(), cfg_.jobs, [&](std::size_t i) {
            values[i] = fitness(ds_, label_, decode(todo[i], genes_), global_, cfg_);
        });
        for (std::size_t i = 0; i < todo.size(); ++i) {
            memo_.emplace(todo[i], values[i]);
        }
        for (auto& ind : pop) {
            ind.fitness = memo_.at(ind.mask);
        }
    }

    std::size_t size() const { return memo_.size(); }

private:
    const Dataset& ds_;
    const Dag& global_;
    VarId label_;
    const GaConfig& cfg_;
    const VarSet& genes_;
    std::map<Mask, double> memo_;
};

// Sorts fittest first and keeps the best k distinct masks.
std::vector<Individual> select_fittest(std::vector<Individual> pop, std::size_t k) {
    std::sort(pop.begin(), pop.end(), fitter);
    pop.erase(std::unique(pop.begin(), pop.end(),
                          [](const Individual& a, const Individual& b) { return a.mask == b.mask; }),
              pop.end());
    if (pop.size() > k) {
        pop.resize(k);
    }
    return pop;
}

ReducedModel finish(const Dataset& ds, const Dag& global, VarId label, const GaConfig& cfg,
                    const VarSet& selected) {
    ReducedModel out;
    out.label = label;
    out.selected = selected;
    out.config = cfg;
    out.terms = fitness_terms(ds, label, selected, global, cfg);
    out.fitness = out.terms.total();
    VarSet keep = selected;
    keep.push_back(label);
    out.dag = global.induced(canonical(keep));
    out.dag.labels = {label};
    return out;
}

void check_label(const Dag& global, VarId label) {
    if (!global.has_node(label) ||
        std::find(global.labels.begin(), global.labels.end(), label) == global.labels.end()) {
        throw UsageError("label " + std::to_string(label) + " is not a label of the model");
    }
}

constexpr std::size_t kMaxEnumeratedParents = 12;

}  // namespace

ReducedModel extract_root_cause(const Dataset& ds, const Dag& global, VarId label,
                                const GaConfig& config) {
    config.validate();
    check_label(global, label);
    const GaConfig cfg = config.resolved(ds, label);
    if (cfg.exhaustive) {
        return exhaustive_root_cause(ds, global, label, cfg);
    }
    const VarSet genes = global.ancestors(label);
    if (genes.empty()) {
        return finish(ds, global, label, cfg, {});
    }
    const VarSet& direct = global.parents_of(label);
    std::vector<std::size_t> direct_pos;
    for (VarId p : direct) {
        direct_pos.push_back(static_cast<std::size_t>(
            std::lower_bound(genes.begin(), genes.end(), p) - genes.begin()));
    }

    FitnessMemo memo(ds, global, label, cfg, genes);
    Rng seed_rng(Rng::derive(cfg.seed, 0));

    std::vector<Individual> generation;
    if (direct_pos.size() <= kMaxEnumeratedParents) {
        const std::uint64_t combos = 1ULL << direct_pos.size();
        for (std::uint64_t bits = 1; bits < combos; ++bits) {
            Mask m(genes.size(), 0);
            for (std::size_t j = 0; j < direct_pos.size(); ++j) {
                if (bits & (1ULL << j)) {
                    m[direct_pos[j]] = 1;
                }
            }
            generation.push_back({std::move(m), 0.0});
        }
    } else {
        for (std::size_t s = 0; s < (1U << kMaxEnumeratedParents); ++s) {
            Mask m(genes.size(), 0);
            bool any = false;
            for (std::size_t pos : direct_pos) {
                if (seed_rng.bernoulli(0.5)) {
                    m[pos] = 1;
                    any = true;
                }
            }
            if (!any) {
                m[direct_pos[seed_rng.below(direct_pos.size())]] = 1;
            }
            generation.push_back({std::move(m), 0.0});
        }
    }
    memo.score(generation);
    const auto k = static_cast<std::size_t>(cfg.K);
    auto best = select_fittest(std::move(generation), k);

    std::vector<GenerationRecord> history;
    auto record = [&](int gen, int stagnation) {
        GenerationRecord r;
        r.generation = gen;
        r.best = best.front().fitness;
        r.runner_up = best.size() > 1 ? best[1].fitness : best.front().fitness;
        r.stagnation = stagnation;
        r.evaluated = memo.size();
        history.push_back(r);
    };
    record(0, 0);

    int stagnation = 0;
    int gen_number = 1;
    while (stagnation < cfg.patience && gen_number < cfg.max_gen) {
        Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(gen_number)));
        std::vector<Individual> next = best;
        for (std::size_t c = 0; c < k; ++c) {
            const std::size_t a = static_cast<std::size_t>(rng.below(best.size()));
            std::size_t b = static_cast<std::size_t>(rng.below(best.size()));
            if (best.size() > 1 && b == a) {
                b = (b + 1 + static_cast<std::size_t>(rng.below(best.size() - 1))) % best.size();
            }
            Mask child(genes.size(), 0);
            for (std::size_t g = 0; g < genes.size(); ++g) {
                child[g] = rng.bernoulli(0.5) ? best[a].mask[g] : best[b].mask[g];
            }
            for (std::size_t g = 0; g < genes.size(); ++g) {
                if (rng.bernoulli(cfg.mutation_rate)) {
                    child[g] ^= 1U;
                }
            }
            child[static_cast<std::size_t>(rng.below(genes.size()))] ^= 1U;
            next.push_back({std::move(child), 0.0});
        }
        memo.score(next);
        const double previous = best.front().fitness;
        best = select_fittest(std::move(next), k);
        if (best.front().fitness - previous < cfg.plateau) {
            ++stagnation;
        } else {
            stagnation = 0;
        }
        record(gen_number, stagnation);
        ++gen_number;
    }

    auto out = finish(ds, global, label, cfg, decode(best.front().mask, genes));
    out.history = std::move(history);
    return out;
}

ReducedModel exhaustive_root_cause(const Dataset& ds, const Dag& global, VarId label,
                                   const GaConfig& config) {
    config.validate();
    check_label(global, label);
    const GaConfig cfg = config.resolved(ds, label);
    const VarSet genes = global.ancestors(label);
    if (genes.size() > 20) {
        throw UsageError("exhaustive search over " + std::to_string(genes.size()) +
                         " ancestors is too large (limit 20)");
    }
    const std::uint64_t combos = 1ULL << genes.size();
    std::vector<double> values(static_cast<std::size_t>(combos), 0.0);
    parallel_for(static_cast<std::size_t>(combos), cfg.jobs, [&](std::size_t bits) {
        VarSet e;
        for (std::size_t j = 0; j < genes.size(); ++j) {
            if (bits & (1ULL << j)) {
                e.push_back(genes[j]);
            }
        }
        values[bits] = fitness(ds, label, e, global, cfg);
    });
    std::size_t best = 0;
    for (std::size_t bits = 1; bits < values.size(); ++bits) {
        if (values[bits] > values[best]) {
            best = bits;
        }
    }
    VarSet e;
    for (std::size_t j = 0; j < genes.size(); ++j) {
        if (best & (1ULL << j)) {
            e.push_back(genes[j]);
        }
    }
    auto out = finish(ds, global, label, cfg, e);
    GenerationRecord r;
    r.best = out.fitness;
    r.runner_up = out.fitness;
    r.evaluated = values.size();
    out.history.push_back(r);
    return out;
}

}  // namespace rcbn
