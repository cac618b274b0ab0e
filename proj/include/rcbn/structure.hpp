#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "rcbn/dataset.hpp"
#include "rcbn/infoscore.hpp"
#include "rcbn/util.hpp"

namespace rcbn {

struct ExplorationBudget {
    int max_parent_set_size = 3;
    int max_candidates_per_node = 20;
    int max_expansions_per_node = 500;

    void validate() const;
};

struct ScoredParentSet {
    VarSet parents;
    double score = 0.0;
    bool operator==(const ScoredParentSet&) const = default;
};

/// Explored parent sets of one variable, scored with exact BIC.
struct CandidateList {
    VarId child = -1;
    /// Best first; always contains the empty set.
    std::vector<ScoredParentSet> entries;
    /// Every set popped from the frontier, in pop order.
    std::vector<ScoredParentSet> explored;
    /// Unexplored unions left when the budget ran out, ranked by BIC* estimate.
    std::vector<ScoredParentSet> frontier;
};

CandidateList explore_candidates(const Dataset& ds, VarId x, const ExplorationBudget& budget,
                                 ScoreCache& cache);

/// Runs explore_candidates for each listed variable on up to `jobs` threads.
std::map<VarId, CandidateList> explore_all(const Dataset& ds, const std::vector<VarId>& vars,
                                           const ExplorationBudget& budget, ScoreCache& cache,
                                           int jobs);

struct Dag {
    std::vector<VarId> nodes;
    std::map<VarId, VarSet> parents;
    std::vector<VarId> labels;
    std::uint64_t seed = 0;

    const VarSet& parents_of(VarId node) const;
    bool has_node(VarId node) const;
    std::size_t edge_count() const;
    /// All strict ancestors of node, sorted.
    VarSet ancestors(VarId node) const;
    /// True if `from` reaches `to` along parent -> child edges (from == to counts).
    bool reaches(VarId from, VarId to) const;
    /// Subgraph on `keep` with every edge of this graph between kept nodes.
    Dag induced(const VarSet& keep) const;
    bool operator==(const Dag&) const = default;
};

/// Assignment order recorded by select_parents: the BFS layer of each node
/// assigned in the label phase, -1 for nodes assigned in the random phase.
struct SelectionTrace {
    std::vector<VarId> order;
    std::vector<int> layer;
};

/// Label-centric acyclic parent selection. Labels seed a FIFO open list in the
/// given order; each popped node takes its best candidate that keeps the graph
/// acyclic; unassigned members of the accepted set join the open list in
/// candidate-rank order. Unreached nodes then choose in an order shuffled by `seed`.
Dag select_parents(const std::map<VarId, CandidateList>& candidates,
                   const std::vector<VarId>& labels, std::uint64_t seed,
                   SelectionTrace* trace = nullptr);

/// Every node after its parents; ties broken by smallest id. Throws InternalError on a cycle.
std::vector<VarId> topological_order(const Dag& g);

bool is_acyclic(const Dag& g);

}  // namespace rcbn
