#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "rcbn/dataset.hpp"
#include "rcbn/inference.hpp"
#include "rcbn/util.hpp"

namespace rcbn {

/// Greedy multiway decision tree over categorical features, split by
/// information gain. Used as a baseline for feature sets chosen by the GA.
class DecisionTree {
public:
    struct Node {
        VarId feature = -1;  // -1 for a leaf
        std::uint32_t majority = 0;
        std::size_t n = 0;
        std::vector<std::unique_ptr<Node>> children;
    };

    DecisionTree() = default;
    DecisionTree(std::unique_ptr<Node> root, VarId label, int max_depth)
        : root_(std::move(root)), label_(label), max_depth_(max_depth) {}

    /// Unobserved or unseen feature values stop at the current node's majority.
    std::uint32_t predict(const Dataset& ds, std::size_t row) const;
    std::vector<std::uint32_t> predict_all(const Dataset& ds) const;
    int depth() const;
    std::size_t leaf_count() const;
    const Node& root() const { return *root_; }
    VarId label() const { return label_; }

private:
    std::unique_ptr<Node> root_;
    VarId label_ = -1;
    int max_depth_ = 0;
};

DecisionTree fit_constrained_tree(const Dataset& ds, const VarSet& features, VarId label, int max_depth);

MetricsReport evaluate_tree(const DecisionTree& tree, const Dataset& test);

}  // namespace rcbn
