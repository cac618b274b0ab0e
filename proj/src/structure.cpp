#include "rcbn/structure.hpp"

#include <algorithm>
#include <deque>
#include <mutex>
#include <queue>
#include <set>
#include <unordered_set>

namespace rcbn {

void ExplorationBudget::validate() const {
    if (max_parent_set_size < 1 || max_candidates_per_node < 1 || max_expansions_per_node < 1) {
        throw UsageError("exploration budget values must all be >= 1");
    }
}

namespace {

struct VarSetHash {
    std::size_t operator()(const VarSet& s) const noexcept {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (VarId v : s) {
            h = (h ^ static_cast<std::uint64_t>(v)) * 0x100000001b3ULL;
        }
        return static_cast<std::size_t>(h ^ (h >> 32));
    }
};

// Higher score first, then lexicographically smaller set.
bool better(const ScoredParentSet& a, const ScoredParentSet& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.parents < b.parents;
}

struct WorseFirst {
    bool operator()(const ScoredParentSet& a, const ScoredParentSet& b) const { return better(b, a); }
};

}  // namespace

CandidateList explore_candidates(const Dataset& ds, VarId x, const ExplorationBudget& budget,
                                 ScoreCache& cache) {
    budget.validate();
    CandidateList out;
    out.child = x;
    const auto max_size = static_cast<std::size_t>(budget.max_parent_set_size);

    std::priority_queue<ScoredParentSet, std::vector<ScoredParentSet>, WorseFirst> frontier;
    std::unordered_set<VarSet, VarSetHash> seen;

    const double empty_score = bic(ds, x, {}, cache);
    seen.insert(VarSet{});
    for (std::size_t v = 0; v < ds.n_vars(); ++v) {
        const auto id = static_cast<VarId>(v);
        if (id == x) {
            continue;
        }
        VarSet s{id};
        frontier.push({s, bic(ds, x, s, cache)});
        seen.insert(std::move(s));
    }

    int expansions = 0;
    while (!frontier.empty() && expansions < budget.max_expansions_per_node) {
        ScoredParentSet top = frontier.top();
        frontier.pop();
        top.score = bic(ds, x, top.parents, cache);
        ++expansions;
        for (const auto& other : out.explored) {
            if (top.parents.size() + other.parents.size() > max_size ||
                !disjoint(top.parents, other.parents)) {
                continue;
            }
            VarSet merged = set_union(top.parents, other.parents);
            if (seen.insert(merged).second) {
                const double estimate = bic_star(x, top.parents, other.parents, cache);
                frontier.push({std::move(merged), estimate});
            }
        }
        out.explored.push_back(std::move(top));
    }

    while (!frontier.empty()) {
        out.frontier.push_back(frontier.top());
        frontier.pop();
    }

    out.entries = out.explored;
    out.entries.push_back({VarSet{}, empty_score});
    std::sort(out.entries.begin(), out.entries.end(), better);
    const auto keep = static_cast<std::size_t>(budget.max_candidates_per_node);
    if (out.entries.size() > keep) {
        const bool empty_kept = std::any_of(out.entries.begin(), out.entries.begin() + static_cast<std::ptrdiff_t>(keep),
                                            [](const auto& e) { return e.parents.empty(); });
        out.entries.resize(keep);
        if (!empty_kept) {
            out.entries.push_back({VarSet{}, empty_score});
        }
    }
    return out;
}

std::map<VarId, CandidateList> explore_all(const Dataset& ds, const std::vector<VarId>& vars,
                                           const ExplorationBudget& budget, ScoreCache& cache,
                                           int jobs) {
    std::vector<CandidateList> lists(vars.size());
    parallel_for(vars.size(), jobs,
                 [&](std::size_t i) { lists[i] = explore_candidates(ds, vars[i], budget, cache); });
    std::map<VarId, CandidateList> out;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        out.emplace(vars[i], std::move(lists[i]));
    }
    return out;
}

const VarSet& Dag::parents_of(VarId node) const {
    static const VarSet kNone;
    const auto it = parents.find(node);
    return it == parents.end() ? kNone : it->second;
}

bool Dag::has_node(VarId node) const { return std::binary_search(nodes.begin(), nodes.end(), node); }

std::size_t Dag::edge_count() const {
    std::size_t n = 0;
    for (const auto& [node, ps] : parents) {
        n += ps.size();
    }
    return n;
}

VarSet Dag::ancestors(VarId node) const {
    std::set<VarId> seen;
    std::vector<VarId> stack(parents_of(node).begin(), parents_of(node).end());
    while (!stack.empty()) {
        const VarId v = stack.back();
        stack.pop_back();
        if (!seen.insert(v).second) {
            continue;
        }
        for (VarId p : parents_of(v)) {
            stack.push_back(p);
        }
    }
    seen.erase(node);
    return VarSet(seen.begin(), seen.end());
}

bool Dag::reaches(VarId from, VarId to) const {
    if (from == to) {
        return true;
    }
    // walk upward from `to` looking for `from`
    std::set<VarId> seen;
    std::vector<VarId> stack{to};
    while (!stack.empty()) {
        const VarId v = stack.back();
        stack.pop_back();
        for (VarId p : parents_of(v)) {
            if (p == from) {
                return true;
            }
            if (seen.insert(p).second) {
                stack.push_back(p);
            }
        }
    }
    return false;
}

Dag Dag::induced(const VarSet& keep) const {
    Dag out;
    out.seed = seed;
    for (VarId v : keep) {
        if (!has_node(v)) {
            throw InternalError("induced: node " + std::to_string(v) + " not in graph");
        }
        out.nodes.push_back(v);
        out.parents[v] = set_intersection(parents_of(v), keep);
    }
    for (VarId l : labels) {
        if (contains(keep, l)) {
            out.labels.push_back(l);
        }
    }
    return out;
}

namespace {

// Position of the first candidate entry containing v; candidate lists are short.
std::size_t candidate_rank(const CandidateList& list, VarId v) {
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
        if (contains(list.entries[i].parents, v)) {
            return i;
        }
    }
    return list.entries.size();
}

}  // namespace

Dag select_parents(const std::map<VarId, CandidateList>& candidates,
                   const std::vector<VarId>& labels, std::uint64_t seed, SelectionTrace* trace) {
    Dag g;
    g.seed = seed;
    g.labels = labels;
    for (const auto& [node, list] : candidates) {
        g.nodes.push_back(node);
    }
    auto list_of = [&](VarId node) -> const CandidateList& {
        const auto it = candidates.find(node);
        if (it == candidates.end()) {
            throw UsageError("select_parents: no candidate list for node " + std::to_string(node));
        }
        return it->second;
    };

    std::set<VarId> assigned;
    std::set<VarId> queued;
    auto choose = [&](VarId x) -> const VarSet& {
        const auto& list = list_of(x);
        for (const auto& entry : list.entries) {
            const bool acyclic = std::none_of(entry.parents.begin(), entry.parents.end(),
                                              [&](VarId c) { return c == x || g.reaches(x, c); });
            if (acyclic) {
                for (VarId c : entry.parents) {
                    list_of(c);
                }
                g.parents[x] = entry.parents;
                assigned.insert(x);
                return g.parents[x];
            }
        }
        g.parents[x] = {};
        assigned.insert(x);
        return g.parents[x];
    };

    std::deque<std::pair<VarId, int>> open;
    for (VarId l : labels) {
        list_of(l);
        if (queued.insert(l).second) {
            open.emplace_back(l, 0);
        }
    }
    while (!open.empty()) {
        const auto [x, layer] = open.front();
        open.pop_front();
        const VarSet& chosen = choose(x);
        if (trace) {
            trace->order.push_back(x);
            trace->layer.push_back(layer);
        }
        std::vector<VarId> next;
        for (VarId c : chosen) {
            if (!assigned.count(c) && !queued.count(c)) {
                next.push_back(c);
            }
        }
        const auto& list = list_of(x);
        std::stable_sort(next.begin(), next.end(), [&](VarId a, VarId b) {
            return candidate_rank(list, a) < candidate_rank(list, b);
        });
        for (VarId c : next) {
            queued.insert(c);
            open.emplace_back(c, layer + 1);
        }
    }

    std::vector<VarId> rest;
    for (VarId v : g.nodes) {
        if (!assigned.count(v)) {
            rest.push_back(v);
        }
    }
    Rng rng(seed);
    rng.shuffle(rest);
    for (VarId x : rest) {
        choose(x);
        if (trace) {
            trace->order.push_back(x);
            trace->layer.push_back(-1);
        }
    }
    return g;
}

std::vector<VarId> topological_order(const Dag& g) {
    std::map<VarId, std::size_t> indegree;
    std::map<VarId, std::vector<VarId>> children;
    for (VarId v : g.nodes) {
        indegree[v] = 0;
    }
    for (const auto& [node, ps] : g.parents) {
        for (VarId p : ps) {
            if (!indegree.count(p) || !indegree.count(node)) {
                throw InternalError("topological_order: edge references a node outside the graph");
            }
            children[p].push_back(node);
            ++indegree[node];
        }
    }
    std::priority_queue<VarId, std::vector<VarId>, std::greater<>> ready;
    for (const auto& [v, d] : indegree) {
        if (d == 0) {
            ready.push(v);
        }
    }
    std::vector<VarId> order;
    while (!ready.empty()) {
        const VarId v = ready.top();
        ready.pop();
        order.push_back(v);
        for (VarId c : children[v]) {
            if (--indegree[c] == 0) {
                ready.push(c);
            }
        }
    }
    if (order.size() != indegree.size()) {
        throw InternalError("topological_order: cycle detected");
    }
    return order;
}

bool is_acyclic(const Dag& g) {
    try {
        topological_order(g);
        return true;
    } catch (const InternalError&) {
        return false;
    }
}

}  // namespace rcbn
