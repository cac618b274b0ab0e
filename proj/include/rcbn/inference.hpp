#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "rcbn/dataset.hpp"
#include "rcbn/structure.hpp"
#include "rcbn/util.hpp"

namespace rcbn {

/// P(node | parents). Parent configurations are numbered mixed-radix over
/// `parents` in order, the first parent most significant; table holds one
/// probability vector of length `card` per configuration.
struct Cpt {
    VarId node = -1;
    VarSet parents;
    std::vector<std::uint32_t> parent_cards;
    std::uint32_t card = 1;
    double alpha = 1.0;
    std::vector<double> table;

    std::size_t n_configs() const { return card == 0 ? 0 : table.size() / card; }
    std::span<const double> row(std::size_t config) const { return {table.data() + config * card, card}; }
    double prob(std::uint32_t state, std::span<const std::uint32_t> parent_states) const;
};

/// Observed states; variables not present are hidden.
using Evidence = std::map<VarId, std::uint32_t>;

/// (N + alpha) / (N_parent + alpha r); configurations never seen with alpha = 0 are uniform.
std::vector<Cpt> fit_cpts(const Dataset& ds, const Dag& g, double alpha = 1.0);

/// Discrete factor over `vars` (sorted); the last variable varies fastest.
struct Factor {
    VarSet vars;
    std::vector<std::uint32_t> cards;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

Factor factor_from_cpt(const Cpt& cpt);
Factor factor_product(const Factor& a, const Factor& b);
Factor sum_out(const Factor& f, VarId v);
Factor restrict_evidence(const Factor& f, const Evidence& ev);

/// Min-degree elimination order over the interaction graph of `factors`,
/// eliminating every variable in `hidden`; ties go to the smallest id.
std::vector<VarId> min_degree_order(const std::vector<Factor>& factors, const VarSet& hidden);

/// Exact P(query | ev) by variable elimination. Throws UsageError for evidence on
/// an unknown variable, evidence on the query, or evidence of probability zero.
std::vector<double> posterior(const std::vector<Cpt>& cpts, const Dag& g, VarId query,
                              const Evidence& ev);

/// Binary labels: state 1 iff P(1|ev) >= threshold. Otherwise argmax, lowest state on ties.
std::uint32_t classify(const std::vector<Cpt>& cpts, const Dag& g, VarId label, const Evidence& ev,
                       double threshold);
std::uint32_t decide(std::span<const double> posterior, double threshold);

struct MetricsReport {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double f1 = 0.0;

    static MetricsReport from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);
};

/// Positive class is state 1 of the label.
MetricsReport metrics_from_predictions(std::span<const std::uint32_t> truth,
                                       std::span<const std::uint32_t> predicted);

/// Classifies every row of `test` with the label and `hidden` variables unobserved and
/// every other graph node observed (cells that are kUnobserved stay hidden).
MetricsReport evaluate(const std::vector<Cpt>& cpts, const Dag& g, VarId label, const Dataset& test,
                       double threshold, const VarSet& hidden = {}, int jobs = 1);

}  // namespace rcbn
