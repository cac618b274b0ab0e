#include "rcbn/inference.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "rcbn/simd/kernels.hpp"

namespace rcbn {

namespace {

constexpr std::uint64_t kMaxTableSize = 1ULL << 26;

std::uint64_t product_of(std::span<const std::uint32_t> cards) {
    std::uint64_t n = 1;
    for (auto c : cards) {
        n *= c;
        if (n > kMaxTableSize) {
            throw UsageError("factor with more than 2^26 entries; the model is too dense for exact inference");
        }
    }
    return n;
}

}  // namespace

double Cpt::prob(std::uint32_t state, std::span<const std::uint32_t> parent_states) const {
    std::size_t config = 0;
    for (std::size_t i = 0; i < parents.size(); ++i) {
        config = config * parent_cards[i] + parent_states[i];
    }
    return table[config * card + state];
}

std::vector<Cpt> fit_cpts(const Dataset& ds, const Dag& g, double alpha) {
    if (!(alpha >= 0.0)) {
        throw UsageError("fit_cpts: alpha must be >= 0");
    }
    std::vector<Cpt> out;
    out.reserve(g.nodes.size());
    for (VarId v : g.nodes) {
        Cpt cpt;
        cpt.node = v;
        cpt.parents = g.parents_of(v);
        cpt.card = ds.cardinality(v);
        cpt.alpha = alpha;
        for (VarId p : cpt.parents) {
            cpt.parent_cards.push_back(ds.cardinality(p));
        }
        const std::uint64_t q = product_of(cpt.parent_cards);
        if (q * cpt.card > kMaxTableSize) {
            throw UsageError("fit_cpts: table for '" + ds.variable(v).name + "' is too large");
        }
        std::vector<std::uint64_t> counts(static_cast<std::size_t>(q * cpt.card), 0);
        const auto child = ds.column(v);
        std::vector<std::span<const std::uint32_t>> pcols;
        for (VarId p : cpt.parents) {
            pcols.push_back(ds.column(p));
        }
        for (std::size_t r = 0; r < ds.n_rows(); ++r) {
            if (child[r] == kUnobserved) {
                continue;
            }
            std::uint64_t config = 0;
            bool observed = true;
            for (std::size_t i = 0; i < pcols.size(); ++i) {
                const auto s = pcols[i][r];
                if (s == kUnobserved) {
                    observed = false;
                    break;
                }
                config = config * cpt.parent_cards[i] + s;
            }
            if (observed) {
                ++counts[static_cast<std::size_t>(config * cpt.card + child[r])];
            }
        }
        cpt.table.resize(counts.size());
        for (std::uint64_t c = 0; c < q; ++c) {
            const auto base = static_cast<std::size_t>(c * cpt.card);
            std::uint64_t total = 0;
            for (std::uint32_t x = 0; x < cpt.card; ++x) {
                total += counts[base + x];
            }
            const double denom = static_cast<double>(total) + alpha * cpt.card;
            for (std::uint32_t x = 0; x < cpt.card; ++x) {
                cpt.table[base + x] = denom > 0.0
                                          ? (static_cast<double>(counts[base + x]) + alpha) / denom
                                          : 1.0 / cpt.card;
            }
        }
        out.push_back(std::move(cpt));
    }
    return out;
}

Factor factor_from_cpt(const Cpt& cpt) {
    // CPT layout is (parents..., node) with the node fastest; reorder into sorted scope.
    VarSet scope = cpt.parents;
    scope.push_back(cpt.node);
    std::vector<std::uint32_t> scope_cards = cpt.parent_cards;
    scope_cards.push_back(cpt.card);

    Factor f;
    f.vars = canonical(scope);
    if (f.vars.size() != scope.size()) {
        throw InternalError("factor_from_cpt: node listed among its own parents");
    }
    for (VarId v : f.vars) {
        const auto pos = static_cast<std::size_t>(std::find(scope.begin(), scope.end(), v) - scope.begin());
        f.cards.push_back(scope_cards[pos]);
    }
    if (f.vars == scope) {
        f.values = cpt.table;
        return f;
    }
    // strides of each sorted-scope variable inside the CPT layout
    std::vector<std::uint64_t> cpt_stride(scope.size());
    std::uint64_t s = 1;
    for (std::size_t i = scope.size(); i-- > 0;) {
        cpt_stride[i] = s;
        s *= scope_cards[i];
    }
    std::vector<std::uint64_t> stride_in_cpt(f.vars.size());
    for (std::size_t i = 0; i < f.vars.size(); ++i) {
        const auto pos = static_cast<std::size_t>(std::find(scope.begin(), scope.end(), f.vars[i]) - scope.begin());
        stride_in_cpt[i] = cpt_stride[pos];
    }
    f.values.resize(cpt.table.size());
    std::vector<std::uint32_t> digit(f.vars.size(), 0);
    std::uint64_t src = 0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        f.values[i] = cpt.table[static_cast<std::size_t>(src)];
        for (std::size_t d = f.vars.size(); d-- > 0;) {
            if (++digit[d] < f.cards[d]) {
                src += stride_in_cpt[d];
                break;
            }
            src -= stride_in_cpt[d] * (f.cards[d] - 1);
            digit[d] = 0;
        }
    }
    return f;
}

namespace {

// For every entry of a factor over `vars`, the flat index of the matching entry of `sub`.
std::vector<std::uint32_t> gather_index(const VarSet& vars, const std::vector<std::uint32_t>& cards,
                                        const Factor& sub, std::size_t total) {
    std::vector<std::uint64_t> sub_stride(vars.size(), 0);
    {
        std::uint64_t s = 1;
        for (std::size_t j = sub.vars.size(); j-- > 0;) {
            const auto pos = static_cast<std::size_t>(
                std::lower_bound(vars.begin(), vars.end(), sub.vars[j]) - vars.begin());
            sub_stride[pos] = s;
            s *= sub.cards[j];
        }
    }
    std::vector<std::uint32_t> index(total);
    std::vector<std::uint32_t> digit(vars.size(), 0);
    std::uint64_t src = 0;
    for (std::size_t i = 0; i < total; ++i) {
        index[i] = static_cast<std::uint32_t>(src);
        for (std::size_t d = vars.size(); d-- > 0;) {
            if (++digit[d] < cards[d]) {
                src += sub_stride[d];
                break;
            }
            src -= sub_stride[d] * (cards[d] - 1);
            digit[d] = 0;
        }
    }
    return index;
}

}  // namespace

Factor factor_product(const Factor& a, const Factor& b) {
    Factor out;
    out.vars = set_union(a.vars, b.vars);
    for (VarId v : out.vars) {
        const auto ia = std::lower_bound(a.vars.begin(), a.vars.end(), v);
        if (ia != a.vars.end() && *ia == v) {
            out.cards.push_back(a.cards[static_cast<std::size_t>(ia - a.vars.begin())]);
        } else {
            const auto ib = std::lower_bound(b.vars.begin(), b.vars.end(), v);
            out.cards.push_back(b.cards[static_cast<std::size_t>(ib - b.vars.begin())]);
        }
    }
    const auto total = static_cast<std::size_t>(product_of(out.cards));
    const auto& k = simd::kernels();
    out.values.assign(total, 1.0);
    if (a.vars == out.vars) {
        out.values = a.values;
    } else {
        k.gather_multiply(out.values, a.values, gather_index(out.vars, out.cards, a, total));
    }
    if (b.vars == out.vars) {
        k.multiply(out.values, b.values);
    } else {
        k.gather_multiply(out.values, b.values, gather_index(out.vars, out.cards, b, total));
    }
    return out;
}

Factor sum_out(const Factor& f, VarId v) {
    const auto it = std::lower_bound(f.vars.begin(), f.vars.end(), v);
    if (it == f.vars.end() || *it != v) {
        return f;
    }
    const auto pos = static_cast<std::size_t>(it - f.vars.begin());
    Factor out;
    out.vars = f.vars;
    out.cards = f.cards;
    out.vars.erase(out.vars.begin() + static_cast<std::ptrdiff_t>(pos));
    out.cards.erase(out.cards.begin() + static_cast<std::ptrdiff_t>(pos));
    std::size_t inner = 1;
    for (std::size_t i = pos + 1; i < f.cards.size(); ++i) {
        inner *= f.cards[i];
    }
    const std::size_t card = f.cards[pos];
    const std::size_t outer = f.values.size() / (inner * card);
    out.values.assign(outer * inner, 0.0);
    const auto& k = simd::kernels();
    for (std::size_t o = 0; o < outer; ++o) {
        const double* block = f.values.data() + o * card * inner;
        double* dst = out.values.data() + o * inner;
        if (inner == 1) {
            dst[0] = k.sum({block, card});
            continue;
        }
        for (std::size_t s = 0; s < card; ++s) {
            for (std::size_t j = 0; j < inner; ++j) {
                dst[j] += block[s * inner + j];
            }
        }
    }
    return out;
}

Factor restrict_evidence(const Factor& f, const Evidence& ev) {
    Factor out;
    std::vector<std::uint64_t> stride(f.vars.size());
    {
        std::uint64_t s = 1;
        for (std::size_t i = f.vars.size(); i-- > 0;) {
            stride[i] = s;
            s *= f.cards[i];
        }
    }
    std::uint64_t base = 0;
    std::vector<std::uint64_t> kept_stride;
    for (std::size_t i = 0; i < f.vars.size(); ++i) {
        const auto e = ev.find(f.vars[i]);
        if (e != ev.end()) {
            if (e->second >= f.cards[i]) {
                throw UsageError("evidence state out of range for variable " + std::to_string(f.vars[i]));
            }
            base += stride[i] * e->second;
        } else {
            out.vars.push_back(f.vars[i]);
            out.cards.push_back(f.cards[i]);
            kept_stride.push_back(stride[i]);
        }
    }
    if (out.vars.size() == f.vars.size()) {
        return f;
    }
    std::uint64_t total = 1;
    for (auto c : out.cards) {
        total *= c;
    }
    out.values.resize(static_cast<std::size_t>(total));
    std::vector<std::uint32_t> digit(out.vars.size(), 0);
    std::uint64_t src = base;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = f.values[static_cast<std::size_t>(src)];
        for (std::size_t d = out.vars.size(); d-- > 0;) {
            if (++digit[d] < out.cards[d]) {
                src += kept_stride[d];
                break;
            }
            src -= kept_stride[d] * (out.cards[d] - 1);
            digit[d] = 0;
        }
    }
    return out;
}

std::vector<VarId> min_degree_order(const std::vector<Factor>& factors, const VarSet& hidden) {
    std::map<VarId, std::set<VarId>> adj;
    for (const auto& f : factors) {
        for (VarId a : f.vars) {
            adj[a];
            for (VarId b : f.vars) {
                if (a != b) {
                    adj[a].insert(b);
                }
            }
        }
    }
    std::set<VarId> remaining(hidden.begin(), hidden.end());
    std::vector<VarId> order;
    while (!remaining.empty()) {
        VarId pick = *remaining.begin();
        std::size_t best = adj[pick].size();
        for (VarId v : remaining) {
            if (adj[v].size() < best) {
                best = adj[v].size();
                pick = v;
            }
        }
        const std::set<VarId> nbrs = adj[pick];
        for (VarId a : nbrs) {
            adj[a].erase(pick);
            for (VarId b : nbrs) {
                if (a != b) {
                    adj[a].insert(b);
                }
            }
        }
        adj.erase(pick);
        remaining.erase(pick);
        order.push_back(pick);
    }
    return order;
}

std::vector<double> posterior(const std::vector<Cpt>& cpts, const Dag& g, VarId query,
                              const Evidence& ev) {
    std::map<VarId, const Cpt*> by_node;
    for (const auto& c : cpts) {
        by_node[c.node] = &c;
    }
    if (!g.has_node(query) || !by_node.count(query)) {
        throw UsageError("posterior: query variable " + std::to_string(query) + " is not in the model");
    }
    for (const auto& [v, state] : ev) {
        if (!g.has_node(v) || !by_node.count(v)) {
            throw UsageError("posterior: evidence references unknown variable " + std::to_string(v));
        }
        if (v == query) {
            throw UsageError("posterior: evidence on the query variable");
        }
        if (state >= by_node[v]->card) {
            throw UsageError("posterior: evidence state out of range for variable " + std::to_string(v));
        }
    }
    // only ancestors of the query and the evidence matter; the rest sums to one
    VarSet relevant = g.ancestors(query);
    relevant.push_back(query);
    for (const auto& [v, state] : ev) {
        relevant = set_union(relevant, g.ancestors(v));
        relevant.push_back(v);
        relevant = canonical(relevant);
    }
    relevant = canonical(relevant);

    std::vector<Factor> factors;
    VarSet hidden;
    for (VarId v : relevant) {
        factors.push_back(restrict_evidence(factor_from_cpt(*by_node.at(v)), ev));
        if (v != query && !ev.count(v)) {
            hidden.push_back(v);
        }
    }
    for (VarId v : min_degree_order(factors, hidden)) {
        std::vector<Factor> keep;
        Factor merged;
        bool any = false;
        for (auto& f : factors) {
            if (std::binary_search(f.vars.begin(), f.vars.end(), v)) {
                merged = any ? factor_product(merged, f) : std::move(f);
                any = true;
            } else {
                keep.push_back(std::move(f));
            }
        }
        if (any) {
            keep.push_back(sum_out(merged, v));
        }
        factors = std::move(keep);
    }
    Factor result;
    result.values = {1.0};
    for (const auto& f : factors) {
        result = factor_product(result, f);
    }
    if (result.vars != VarSet{query}) {
        throw InternalError("posterior: elimination left variables besides the query");
    }
    const auto& k = simd::kernels();
    const double total = k.sum(result.values);
    if (!(total > 0.0)) {
        throw UsageError("posterior: evidence has probability zero under the model");
    }
    k.scale(result.values, 1.0 / total);
    return result.values;
}

std::uint32_t decide(std::span<const double> post, double threshold) {
    if (post.size() == 2) {
        return post[1] >= threshold ? 1U : 0U;
    }
    std::uint32_t best = 0;
    for (std::uint32_t s = 1; s < post.size(); ++s) {
        if (post[s] > post[best]) {
            best = s;
        }
    }
    return best;
}

std::uint32_t classify(const std::vector<Cpt>& cpts, const Dag& g, VarId label, const Evidence& ev,
                       double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw UsageError("classify: threshold must lie in (0, 1)");
    }
    return decide(posterior(cpts, g, label, ev), threshold);
}

MetricsReport MetricsReport::from_counts(std::size_t tp, std::size_t fp, std::size_t tn,
                                         std::size_t fn) {
    MetricsReport m;
    m.tp = tp;
    m.fp = fp;
    m.tn = tn;
    m.fn = fn;
    auto ratio = [](std::size_t a, std::size_t b) {
        return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
    };
    m.precision = ratio(tp, tp + fp);
    m.sensitivity = ratio(tp, tp + fn);
    m.specificity = ratio(tn, tn + fp);
    const double s = m.precision + m.sensitivity;
    m.f1 = s > 0.0 ? 2.0 * m.precision * m.sensitivity / s : 0.0;
    return m;
}

MetricsReport metrics_from_predictions(std::span<const std::uint32_t> truth,
                                       std::span<const std::uint32_t> predicted) {
    if (truth.size() != predicted.size()) {
        throw InternalError("metrics: length mismatch");
    }
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = truth[i] == 1;
        const bool p = predicted[i] == 1;
        tp += (t && p);
        fp += (!t && p);
        tn += (!t && !p);
        fn += (t && !p);
    }
    return MetricsReport::from_counts(tp, fp, tn, fn);
}

MetricsReport evaluate(const std::vector<Cpt>& cpts, const Dag& g, VarId label, const Dataset& test,
                       double threshold, const VarSet& hidden, int jobs) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw UsageError("evaluate: threshold must lie in (0, 1)");
    }
    for (const auto& c : cpts) {
        if (static_cast<std::size_t>(c.node) >= test.n_vars() || test.cardinality(c.node) != c.card) {
            throw UsageError("evaluate: test data schema does not match the model");
        }
    }
    std::vector<VarId> observed;
    for (VarId v : g.nodes) {
        if (v != label && !contains(canonical(hidden), v)) {
            observed.push_back(v);
        }
    }
    // rows sharing an evidence pattern share a posterior
    std::map<std::vector<std::uint32_t>, std::size_t> pattern_index;
    std::vector<std::vector<std::uint32_t>> patterns;
    std::vector<std::size_t> row_pattern(test.n_rows());
    for (std::size_t r = 0; r < test.n_rows(); ++r) {
        std::vector<std::uint32_t> key;
        key.reserve(observed.size());
        for (VarId v : observed) {
            key.push_back(test.column(v)[r]);
        }
        auto [it, inserted] = pattern_index.try_emplace(key, patterns.size());
        if (inserted) {
            patterns.push_back(key);
        }
        row_pattern[r] = it->second;
    }
    std::vector<std::uint32_t> decision(patterns.size());
    parallel_for(patterns.size(), jobs, [&](std::size_t i) {
        Evidence ev;
        for (std::size_t j = 0; j < observed.size(); ++j) {
            if (patterns[i][j] != kUnobserved) {
                ev[observed[j]] = patterns[i][j];
            }
        }
        decision[i] = decide(posterior(cpts, g, label, ev), threshold);
    });
    std::vector<std::uint32_t> predicted(test.n_rows());
    for (std::size_t r = 0; r < test.n_rows(); ++r) {
        predicted[r] = decision[row_pattern[r]];
    }
    const auto truth = test.column(label);
    return metrics_from_predictions(std::vector<std::uint32_t>(truth.begin(), truth.end()), predicted);
}

}  // namespace rcbn
