#include "rcbn/decision_tree.hpp"

#include <algorithm>
#include <cmath>

namespace rcbn {

namespace {

std::uint32_t majority_of(const std::vector<std::size_t>& counts) {
    std::uint32_t best = 0;
    for (std::uint32_t c = 1; c < counts.size(); ++c) {
        if (counts[c] > counts[best]) {
            best = c;
        }
    }
    return best;
}

double entropy_of(const std::vector<std::size_t>& counts, std::size_t n) {
    double h = 0.0;
    for (auto c : counts) {
        if (c > 0) {
            const double p = static_cast<double>(c) / static_cast<double>(n);
            h -= p * std::log(p);
        }
    }
    return h;
}

struct Builder {
    const Dataset& ds;
    VarId label;
    int max_depth;

    std::unique_ptr<DecisionTree::Node> build(const std::vector<std::size_t>& rows, VarSet features,
                                              int depth, std::uint32_t fallback) const {
        auto node = std::make_unique<DecisionTree::Node>();
        node->n = rows.size();
        const auto y = ds.column(label);
        std::vector<std::size_t> counts(ds.cardinality(label), 0);
        for (auto r : rows) {
            ++counts[y[r]];
        }
        node->majority = rows.empty() ? fallback : majority_of(counts);
        if (rows.empty() || depth >= max_depth || features.empty()) {
            return node;
        }
        const double h = entropy_of(counts, rows.size());
        if (h <= 0.0) {
            return node;
        }
        VarId best_feature = -1;
        double best_gain = 1e-12;
        for (VarId f : features) {
            const auto x = ds.column(f);
            const std::size_t card = ds.cardinality(f);
            std::vector<std::size_t> joint(card * counts.size(), 0);
            std::vector<std::size_t> branch(card, 0);
            std::size_t observed = 0;
            for (auto r : rows) {
                if (x[r] == kUnobserved) {
                    continue;
                }
                ++joint[x[r] * counts.size() + y[r]];
                ++branch[x[r]];
                ++observed;
            }
            if (observed == 0) {
                continue;
            }
            double cond = 0.0;
            for (std::size_t s = 0; s < card; ++s) {
                if (branch[s] == 0) {
                    continue;
                }
                std::vector<std::size_t> sub(joint.begin() + static_cast<std::ptrdiff_t>(s * counts.size()),
                                             joint.begin() + static_cast<std::ptrdiff_t>((s + 1) * counts.size()));
                cond += static_cast<double>(branch[s]) / static_cast<double>(observed) * entropy_of(sub, branch[s]);
            }
            const double gain = h - cond;
            if (gain > best_gain) {
                best_gain = gain;
                best_feature = f;
            }
        }
        if (best_feature < 0) {
            return node;
        }
        node->feature = best_feature;
        const auto x = ds.column(best_feature);
        const std::size_t card = ds.cardinality(best_feature);
        std::vector<std::vector<std::size_t>> parts(card);
        for (auto r : rows) {
            if (x[r] != kUnobserved) {
                parts[x[r]].push_back(r);
            }
        }
        features.erase(std::find(features.begin(), features.end(), best_feature));
        for (std::size_t s = 0; s < card; ++s) {
            node->children.push_back(build(parts[s], features, depth + 1, node->majority));
        }
        return node;
    }
};

int depth_of(const DecisionTree::Node& n) {
    int d = 0;
    for (const auto& c : n.children) {
        d = std::max(d, 1 + depth_of(*c));
    }
    return d;
}

std::size_t leaves_of(const DecisionTree::Node& n) {
    if (n.children.empty()) {
        return 1;
    }
    std::size_t total = 0;
    for (const auto& c : n.children) {
        total += leaves_of(*c);
    }
    return total;
}

}  // namespace

DecisionTree fit_constrained_tree(const Dataset& ds, const VarSet& features, VarId label, int max_depth) {
    if (features.empty()) {
        throw UsageError("decision tree: empty feature set");
    }
    if (max_depth < 1) {
        throw UsageError("decision tree: max_depth must be >= 1");
    }
    if (contains(canonical(features), label)) {
        throw UsageError("decision tree: label among the features");
    }
    std::vector<std::size_t> rows;
    const auto y = ds.column(label);
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        if (y[r] != kUnobserved) {
            rows.push_back(r);
        }
    }
    Builder b{ds, label, max_depth};
    return DecisionTree(b.build(rows, canonical(features), 0, 0), label, max_depth);
}

std::uint32_t DecisionTree::predict(const Dataset& ds, std::size_t row) const {
    const Node* n = root_.get();
    while (n->feature >= 0) {
        const auto s = ds.column(n->feature)[row];
        if (s == kUnobserved || s >= n->children.size()) {
            break;
        }
        n = n->children[s].get();
    }
    return n->majority;
}

std::vector<std::uint32_t> DecisionTree::predict_all(const Dataset& ds) const {
    std::vector<std::uint32_t> out(ds.n_rows());
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        out[r] = predict(ds, r);
    }
    return out;
}

int DecisionTree::depth() const { return root_ ? depth_of(*root_) : 0; }

std::size_t DecisionTree::leaf_count() const { return root_ ? leaves_of(*root_) : 0; }

MetricsReport evaluate_tree(const DecisionTree& tree, const Dataset& test) {
    const auto truth = test.column(tree.label());
    return metrics_from_predictions(std::vector<std::uint32_t>(truth.begin(), truth.end()),
                                    tree.predict_all(test));
}

}  // namespace rcbn
