#pragma once

// Fixture builders and brute-force oracles shared by the test binaries.
// The oracles recount from raw codes with std::map and never call into the
// scoring or inference code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "rcbn/dataset.hpp"
#include "rcbn/inference.hpp"
#include "rcbn/structure.hpp"
#include "rcbn/util.hpp"

namespace rcbn::testing {

inline Dataset make_dataset(const std::vector<std::vector<std::uint32_t>>& cols,
                            std::vector<int> cards = {}) {
    std::vector<Variable> vars;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        Variable v;
        v.name = "v" + std::to_string(i);
        if (cards.empty()) {
            std::uint32_t mx = 0;
            for (auto x : cols[i]) {
                mx = std::max(mx, x);
            }
            v.cardinality = static_cast<int>(mx) + 1;
        } else {
            v.cardinality = cards[i];
        }
        vars.push_back(v);
    }
    return Dataset(vars, cols);
}

inline Dataset random_dataset(Rng& rng, std::size_t n_vars, std::size_t n_rows, std::uint32_t max_card) {
    std::vector<std::vector<std::uint32_t>> cols(n_vars);
    std::vector<int> cards;
    for (std::size_t v = 0; v < n_vars; ++v) {
        const auto card = static_cast<std::uint32_t>(1 + rng.below(max_card));
        cards.push_back(static_cast<int>(card));
        for (std::size_t r = 0; r < n_rows; ++r) {
            cols[v].push_back(static_cast<std::uint32_t>(rng.below(card)));
        }
    }
    return make_dataset(cols, cards);
}

/// Random data where each variable copies or perturbs an earlier one, so scores differ.
inline Dataset random_dependent_dataset(Rng& rng, std::size_t n_vars, std::size_t n_rows,
                                        std::uint32_t max_card) {
    std::vector<std::vector<std::uint32_t>> cols(n_vars);
    std::vector<int> cards;
    for (std::size_t v = 0; v < n_vars; ++v) {
        const auto card = static_cast<std::uint32_t>(2 + rng.below(max_card - 1));
        cards.push_back(static_cast<int>(card));
        const bool depends = v > 0 && rng.bernoulli(0.7);
        const std::size_t src = depends ? static_cast<std::size_t>(rng.below(v)) : 0;
        const double noise = 0.1 + 0.5 * rng.uniform();
        for (std::size_t r = 0; r < n_rows; ++r) {
            std::uint32_t x = static_cast<std::uint32_t>(rng.below(card));
            if (depends && !rng.bernoulli(noise)) {
                x = cols[src][r] % card;
            }
            cols[v].push_back(x);
        }
    }
    return make_dataset(cols, cards);
}

// Joint key of the given variables in row r.
inline std::vector<std::uint32_t> key_of(const Dataset& ds, const VarSet& vars, std::size_t r) {
    std::vector<std::uint32_t> k;
    for (VarId v : vars) {
        k.push_back(ds.column(v)[r]);
    }
    return k;
}

inline double oracle_entropy(const Dataset& ds, const VarSet& vars) {
    std::map<std::vector<std::uint32_t>, double> counts;
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        counts[key_of(ds, vars, r)] += 1.0;
    }
    const double n = static_cast<double>(ds.n_rows());
    double h = 0.0;
    for (const auto& [k, c] : counts) {
        h -= (c / n) * std::log(c / n);
    }
    return h;
}

/// H(X | Y) = H(X, Y) - H(Y).
inline double oracle_conditional_entropy(const Dataset& ds, VarId x, const VarSet& y) {
    VarSet xy = y;
    xy.push_back(x);
    return oracle_entropy(ds, xy) - oracle_entropy(ds, y);
}

inline double oracle_mi(const Dataset& ds, VarId x, const VarSet& y) {
    return oracle_entropy(ds, {x}) + oracle_entropy(ds, y) - [&] {
        VarSet xy = y;
        xy.push_back(x);
        return oracle_entropy(ds, xy);
    }();
}

inline double oracle_u(const Dataset& ds, VarId d, const VarSet& e) {
    const double h = oracle_entropy(ds, {d});
    return h == 0.0 ? 0.0 : oracle_mi(ds, d, e) / h;
}

inline double oracle_bic(const Dataset& ds, VarId x, const VarSet& parents) {
    std::map<std::vector<std::uint32_t>, std::map<std::uint32_t, double>> counts;
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        counts[key_of(ds, parents, r)][ds.column(x)[r]] += 1.0;
    }
    double ll = 0.0;
    for (const auto& [k, row] : counts) {
        double total = 0.0;
        for (const auto& [s, c] : row) {
            total += c;
        }
        for (const auto& [s, c] : row) {
            ll += c * std::log(c / total);
        }
    }
    double q = 1.0;
    for (VarId p : parents) {
        q *= ds.cardinality(p);
    }
    const double n = static_cast<double>(ds.n_rows());
    return ll - 0.5 * std::log(n) * q * (ds.cardinality(x) - 1.0);
}

/// Random network: each node draws up to max_parents parents among lower ids.
struct RandomNetwork {
    Dag dag;
    std::vector<std::uint32_t> cards;
    std::vector<Cpt> cpts;
};

inline RandomNetwork random_network(Rng& rng, std::size_t n_nodes, std::uint32_t max_card,
                                    std::size_t max_parents) {
    RandomNetwork net;
    for (std::size_t v = 0; v < n_nodes; ++v) {
        net.cards.push_back(static_cast<std::uint32_t>(1 + rng.below(max_card)));
    }
    for (std::size_t v = 0; v < n_nodes; ++v) {
        const auto id = static_cast<VarId>(v);
        net.dag.nodes.push_back(id);
        VarSet ps;
        for (std::size_t p = 0; p < v; ++p) {
            if (ps.size() < max_parents && rng.bernoulli(0.4)) {
                ps.push_back(static_cast<VarId>(p));
            }
        }
        net.dag.parents[id] = ps;
        Cpt c;
        c.node = id;
        c.parents = ps;
        c.card = net.cards[v];
        std::size_t q = 1;
        for (VarId p : ps) {
            c.parent_cards.push_back(net.cards[static_cast<std::size_t>(p)]);
            q *= net.cards[static_cast<std::size_t>(p)];
        }
        for (std::size_t k = 0; k < q; ++k) {
            std::vector<double> row(c.card);
            double total = 0.0;
            for (auto& x : row) {
                x = 0.05 + rng.uniform();
                total += x;
            }
            for (auto x : row) {
                c.table.push_back(x / total);
            }
        }
        net.cpts.push_back(std::move(c));
    }
    return net;
}

/// P(query | ev) by summing the full joint over every assignment.
inline std::vector<double> oracle_posterior(const RandomNetwork& net, VarId query, const Evidence& ev) {
    const std::size_t n = net.cards.size();
    std::vector<std::uint32_t> a(n, 0);
    std::vector<double> out(net.cards[static_cast<std::size_t>(query)], 0.0);
    while (true) {
        bool consistent = true;
        for (const auto& [v, s] : ev) {
            if (a[static_cast<std::size_t>(v)] != s) {
                consistent = false;
            }
        }
        if (consistent) {
            double p = 1.0;
            for (const auto& c : net.cpts) {
                std::size_t config = 0;
                for (std::size_t i = 0; i < c.parents.size(); ++i) {
                    config = config * c.parent_cards[i] + a[static_cast<std::size_t>(c.parents[i])];
                }
                p *= c.table[config * c.card + a[static_cast<std::size_t>(c.node)]];
            }
            out[a[static_cast<std::size_t>(query)]] += p;
        }
        std::size_t i = 0;
        while (i < n && ++a[i] == net.cards[i]) {
            a[i] = 0;
            ++i;
        }
        if (i == n) {
            break;
        }
    }
    double total = 0.0;
    for (double x : out) {
        total += x;
    }
    for (double& x : out) {
        x /= total;
    }
    return out;
}

/// Ancestral sampling of n_rows rows from a random network (parents have lower ids).
inline Dataset sample_network(const RandomNetwork& net, Rng& rng, std::size_t n_rows) {
    const std::size_t n = net.cards.size();
    std::vector<std::vector<std::uint32_t>> cols(n);
    std::vector<std::uint32_t> a(n);
    for (std::size_t r = 0; r < n_rows; ++r) {
        for (const auto& c : net.cpts) {
            std::size_t config = 0;
            for (std::size_t i = 0; i < c.parents.size(); ++i) {
                config = config * c.parent_cards[i] + a[static_cast<std::size_t>(c.parents[i])];
            }
            double u = rng.uniform();
            std::uint32_t s = 0;
            while (s + 1 < c.card && u >= c.table[config * c.card + s]) {
                u -= c.table[config * c.card + s];
                ++s;
            }
            a[static_cast<std::size_t>(c.node)] = s;
            cols[static_cast<std::size_t>(c.node)].push_back(s);
        }
    }
    std::vector<int> cards(net.cards.begin(), net.cards.end());
    return make_dataset(cols, cards);
}

/// Global model for GA tests: the last node is the label and has between
/// min_ancestors and max_ancestors ancestors.
struct GaFixture {
    Dataset data;
    Dag global;
    VarId label = -1;
};

inline GaFixture ga_fixture(Rng& rng, std::size_t n_nodes, std::size_t n_rows, std::size_t min_ancestors,
                            std::size_t max_ancestors) {
    while (true) {
        auto net = random_network(rng, n_nodes, 3, 3);
        const auto label = static_cast<VarId>(n_nodes - 1);
        const auto anc = net.dag.ancestors(label).size();
        if (anc < min_ancestors || anc > max_ancestors || net.cards.back() < 2) {
            continue;
        }
        for (auto& c : net.cards) {
            if (c < 2) {
                c = 2;
            }
        }
        // re-draw tables for the widened cardinalities
        RandomNetwork fixed;
        for (std::size_t v = 0; v < n_nodes; ++v) {
            Cpt c;
            c.node = static_cast<VarId>(v);
            c.parents = net.dag.parents_of(c.node);
            c.card = net.cards[v];
            std::size_t q = 1;
            for (VarId p : c.parents) {
                c.parent_cards.push_back(net.cards[static_cast<std::size_t>(p)]);
                q *= net.cards[static_cast<std::size_t>(p)];
            }
            for (std::size_t k = 0; k < q; ++k) {
                std::vector<double> row(c.card);
                double total = 0.0;
                for (auto& x : row) {
                    x = std::pow(rng.uniform(), 2.0) + 0.02;
                    total += x;
                }
                for (auto x : row) {
                    c.table.push_back(x / total);
                }
            }
            fixed.cpts.push_back(std::move(c));
        }
        fixed.dag = net.dag;
        fixed.cards = net.cards;
        GaFixture out;
        out.data = sample_network(fixed, rng, n_rows);
        out.global = net.dag;
        out.global.labels = {label};
        out.label = label;
        return out;
    }
}

// Independent fitness from the joint-count oracles.
inline double oracle_fitness(const Dataset& ds, VarId label, const VarSet& e, const Dag& g, double C, int tau) {
    if (e.empty()) {
        return 0.0;
    }
    double l = 0.0;
    int states = 0;
    for (VarId y : e) {
        VarSet kept;
        for (VarId p : g.parents_of(y)) {
            if (std::find(e.begin(), e.end(), p) != e.end()) {
                kept.push_back(p);
            }
        }
        l += kept.empty() ? 0.0 : oracle_u(ds, y, kept);
        states += static_cast<int>(ds.cardinality(y));
    }
    l /= static_cast<double>(e.size());
    const double hinge = std::max(0.0, static_cast<double>(states - tau) / tau);
    return oracle_u(ds, label, e) + l - C * hinge * hinge;
}

struct Best {
    VarSet set;
    double value = -std::numeric_limits<double>::infinity();
};

inline Best oracle_best_subset(const Dataset& ds, VarId label, const Dag& g, double C, int tau) {
    const VarSet anc = g.ancestors(label);
    Best best;
    for (std::uint64_t bits = 0; bits < (1ULL << anc.size()); ++bits) {
        VarSet e;
        for (std::size_t j = 0; j < anc.size(); ++j) {
            if (bits & (1ULL << j)) {
                e.push_back(anc[j]);
            }
        }
        const double f = oracle_fitness(ds, label, e, g, C, tau);
        if (f > best.value) {
            best = {e, f};
        }
    }
    return best;
}

/// Random candidate lists over n nodes, each with the empty set last.
inline std::map<VarId, CandidateList> random_candidates(Rng& rng, std::size_t n, std::size_t max_entries,
                                                        std::size_t max_size) {
    std::map<VarId, CandidateList> out;
    for (std::size_t v = 0; v < n; ++v) {
        CandidateList list;
        list.child = static_cast<VarId>(v);
        const std::size_t k = static_cast<std::size_t>(rng.below(max_entries + 1));
        for (std::size_t e = 0; e < k; ++e) {
            VarSet s;
            const std::size_t size = 1 + static_cast<std::size_t>(rng.below(max_size));
            for (std::size_t j = 0; j < size; ++j) {
                const auto p = static_cast<VarId>(rng.below(n));
                if (p != list.child) {
                    s.push_back(p);
                }
            }
            s = canonical(s);
            if (!s.empty()) {
                list.entries.push_back({s, -static_cast<double>(e)});
            }
        }
        list.entries.push_back({{}, -1e9});
        out.emplace(list.child, std::move(list));
    }
    return out;
}

}  // namespace rcbn::testing
