#include <doctest.h>

#include <algorithm>
#include <set>

#include "rcbn/structure.hpp"
#include "support.hpp"

using namespace rcbn;
using rcbn::testing::make_dataset;

namespace {

CandidateList list_of(VarId child, std::vector<VarSet> sets) {
    CandidateList l;
    l.child = child;
    double score = 0.0;
    for (auto& s : sets) {
        l.entries.push_back({s, score});
        score -= 1.0;
    }
    return l;
}

bool has_entry(const CandidateList& l, const VarSet& s) {
    return std::any_of(l.entries.begin(), l.entries.end(), [&](const auto& e) { return e.parents == s; });
}

}  // namespace

TEST_CASE("independent variable prefers the empty parent set") {
    std::vector<std::uint32_t> x;
    std::vector<std::uint32_t> a;
    std::vector<std::uint32_t> b;
    for (std::uint32_t i = 0; i < 64; ++i) {
        x.push_back(i % 2);
        a.push_back((i / 2) % 2);
        b.push_back((i / 4) % 2);
    }
    const auto ds = make_dataset({x, a, b});
    ScoreCache cache;
    const auto l = explore_candidates(ds, 0, {}, cache);
    REQUIRE_FALSE(l.entries.empty());
    CHECK(l.entries.front().parents.empty());
    CHECK(l.entries.front().score == doctest::Approx(testing::oracle_bic(ds, 0, {})).epsilon(1e-14));
}

TEST_CASE("copy column is the top candidate") {
    Rng rng(3);
    std::vector<std::uint32_t> y;
    std::vector<std::uint32_t> z;
    for (int i = 0; i < 100; ++i) {
        y.push_back(static_cast<std::uint32_t>(rng.below(3)));
        z.push_back(static_cast<std::uint32_t>(rng.below(3)));
    }
    const auto ds = make_dataset({y, y, z});
    ScoreCache cache;
    const auto l = explore_candidates(ds, 0, {}, cache);
    CHECK(l.entries.front().parents == VarSet{1});
}

TEST_CASE("candidate list invariants") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto ds = testing::random_dependent_dataset(rng, 6, 150, 3);
        ExplorationBudget budget;
        budget.max_parent_set_size = 1 + static_cast<int>(rng.below(3));
        budget.max_candidates_per_node = 1 + static_cast<int>(rng.below(8));
        budget.max_expansions_per_node = 1 + static_cast<int>(rng.below(30));
        ScoreCache cache;
        const VarId x = static_cast<VarId>(rng.below(6));
        const auto l = explore_candidates(ds, x, budget, cache);
        CHECK(l.child == x);
        CHECK(has_entry(l, {}));
        CHECK(l.entries.size() <= static_cast<std::size_t>(budget.max_candidates_per_node) + 1);
        CHECK(l.explored.size() <= static_cast<std::size_t>(budget.max_expansions_per_node));
        std::set<VarSet> seen;
        for (std::size_t i = 0; i < l.entries.size(); ++i) {
            const auto& e = l.entries[i];
            CHECK(seen.insert(e.parents).second);
            CHECK_FALSE(contains(e.parents, x));
            CHECK(e.parents.size() <= static_cast<std::size_t>(budget.max_parent_set_size));
            CHECK(e.score == bic_uncached(ds, x, e.parents));
            if (i > 0 && !e.parents.empty()) {
                CHECK(l.entries[i - 1].score >= e.score);
            }
        }
    }
}

TEST_CASE("max_parent_set_size 1 yields singletons and the empty set") {
    Rng rng(7);
    const auto ds = testing::random_dependent_dataset(rng, 5, 100, 3);
    ExplorationBudget b;
    b.max_parent_set_size = 1;
    ScoreCache cache;
    for (const auto& e : explore_candidates(ds, 2, b, cache).entries) {
        CHECK(e.parents.size() <= 1);
    }
}

TEST_CASE("budget validation") {
    ExplorationBudget b;
    b.max_candidates_per_node = 0;
    CHECK_THROWS_AS(b.validate(), UsageError);
}

TEST_CASE("best entry matches exhaustive enumeration on 4-variable tables") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const auto ds = testing::random_dependent_dataset(rng, 4, 30 + rng.below(300), 4);
        ExplorationBudget b;
        b.max_parent_set_size = 2;
        ScoreCache cache;
        for (VarId x = 0; x < 4; ++x) {
            double best = testing::oracle_bic(ds, x, {});
            std::vector<VarId> others;
            for (VarId v = 0; v < 4; ++v) {
                if (v != x) {
                    others.push_back(v);
                }
            }
            for (std::size_t i = 0; i < others.size(); ++i) {
                best = std::max(best, testing::oracle_bic(ds, x, {others[i]}));
                for (std::size_t j = i + 1; j < others.size(); ++j) {
                    best = std::max(best, testing::oracle_bic(ds, x, {others[i], others[j]}));
                }
            }
            CHECK(explore_candidates(ds, x, b, cache).entries.front().score ==
                  doctest::Approx(best).epsilon(1e-12));
        }
    }
}

TEST_CASE("explore_all is independent of the worker count") {
    Rng rng(11);
    const auto ds = testing::random_dependent_dataset(rng, 7, 120, 3);
    std::vector<VarId> vars{0, 1, 2, 3, 4, 5, 6};
    ScoreCache c1;
    ScoreCache c4;
    const auto a = explore_all(ds, vars, {}, c1, 1);
    const auto b = explore_all(ds, vars, {}, c4, 4);
    for (VarId v : vars) {
        CHECK(a.at(v).entries == b.at(v).entries);
        CHECK(a.at(v).explored == b.at(v).explored);
    }
}

TEST_CASE("two-node cycle is rejected") {
    std::map<VarId, CandidateList> c;
    c.emplace(0, list_of(0, {{1}, {}}));
    c.emplace(1, list_of(1, {{0}, {}}));
    const auto g = select_parents(c, {0}, 1);
    CHECK(g.parents_of(0) == VarSet{1});
    CHECK(g.parents_of(1).empty());
}

TEST_CASE("lone label with only the empty candidate") {
    std::map<VarId, CandidateList> c;
    c.emplace(0, list_of(0, {{}}));
    const auto g = select_parents(c, {0}, 1);
    CHECK(g.nodes == std::vector<VarId>{0});
    CHECK(g.parents_of(0).empty());
}

TEST_CASE("5-node chain, stepped by hand") {
    // 0 <- 1 <- 2 <- 3 <- 4; node 1's first choice {0,2} and node 4's {0}, {1} close cycles
    std::map<VarId, CandidateList> c;
    c.emplace(0, list_of(0, {{1}, {}}));
    c.emplace(1, list_of(1, {{0, 2}, {2}, {}}));
    c.emplace(2, list_of(2, {{3}, {}}));
    c.emplace(3, list_of(3, {{4}, {}}));
    c.emplace(4, list_of(4, {{0}, {1}, {}}));
    SelectionTrace trace;
    const auto g = select_parents(c, {0}, 3, &trace);
    CHECK(g.parents_of(0) == VarSet{1});
    CHECK(g.parents_of(1) == VarSet{2});
    CHECK(g.parents_of(2) == VarSet{3});
    CHECK(g.parents_of(3) == VarSet{4});
    CHECK(g.parents_of(4).empty());
    CHECK(trace.order == std::vector<VarId>{0, 1, 2, 3, 4});
    CHECK(trace.layer == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("accepted nodes join the open list in candidate-rank order") {
    std::map<VarId, CandidateList> c;
    c.emplace(0, list_of(0, {{1}, {}}));
    c.emplace(1, list_of(1, {{0, 4}, {3, 4}, {}}));
    c.emplace(2, list_of(2, {{}}));
    c.emplace(3, list_of(3, {{}}));
    c.emplace(4, list_of(4, {{}}));
    SelectionTrace trace;
    const auto g = select_parents(c, {0}, 3, &trace);
    CHECK(g.parents_of(1) == VarSet{3, 4});
    CHECK(trace.order == std::vector<VarId>{0, 1, 4, 3, 2});
    CHECK(trace.layer == std::vector<int>{0, 1, 2, 2, -1});
}

TEST_CASE("several labels seed the open list in declaration order") {
    std::map<VarId, CandidateList> c;
    c.emplace(0, list_of(0, {{2}, {}}));
    c.emplace(1, list_of(1, {{3}, {}}));
    c.emplace(2, list_of(2, {{}}));
    c.emplace(3, list_of(3, {{}}));
    SelectionTrace trace;
    select_parents(c, {1, 0}, 3, &trace);
    CHECK(trace.order == std::vector<VarId>{1, 0, 3, 2});
    CHECK(trace.layer == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("missing candidate list is an error") {
    std::map<VarId, CandidateList> c;
    c.emplace(0, list_of(0, {{5}, {}}));
    CHECK_THROWS_AS(select_parents(c, {0}, 1), UsageError);
}

TEST_CASE("random candidate fixtures: acyclic, layered, no invented edges, deterministic") {
    Rng rng(13);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.below(12));
        const auto cands = testing::random_candidates(rng, n, 6, 3);
        std::vector<VarId> labels{static_cast<VarId>(rng.below(n))};
        if (rng.bernoulli(0.3)) {
            const auto extra = static_cast<VarId>(rng.below(n));
            if (extra != labels[0]) {
                labels.push_back(extra);
            }
        }
        const std::uint64_t seed = rng.next();
        SelectionTrace trace;
        const auto g = select_parents(cands, labels, seed, &trace);
        CHECK(is_acyclic(g));
        CHECK(g.nodes.size() == n);
        CHECK(trace.order.size() == n);
        bool random_phase = false;
        for (std::size_t i = 0; i < trace.layer.size(); ++i) {
            if (trace.layer[i] < 0) {
                random_phase = true;
                continue;
            }
            CHECK_FALSE(random_phase);
            if (i > 0 && trace.layer[i - 1] >= 0) {
                CHECK(trace.layer[i - 1] <= trace.layer[i]);
            }
        }
        for (VarId v : g.nodes) {
            CHECK(has_entry(cands.at(v), g.parents_of(v)));
        }
        CHECK(select_parents(cands, labels, seed) == g);
    }
}

TEST_CASE("topological order examples") {
    Dag empty;
    CHECK(topological_order(empty).empty());

    Dag chain;
    chain.nodes = {0, 1, 2};
    chain.parents = {{0, {}}, {1, {0}}, {2, {1}}};
    CHECK(topological_order(chain) == std::vector<VarId>{0, 1, 2});

    Dag diamond;
    diamond.nodes = {0, 1, 2, 3};
    diamond.parents = {{0, {}}, {1, {0}}, {2, {0}}, {3, {1, 2}}};
    const auto order = topological_order(diamond);
    CHECK(order.front() == 0);
    CHECK(order.back() == 3);

    Dag cycle;
    cycle.nodes = {0, 1};
    cycle.parents = {{0, {1}}, {1, {0}}};
    CHECK_THROWS_AS(topological_order(cycle), InternalError);
    CHECK_FALSE(is_acyclic(cycle));
}

TEST_CASE("ancestors, reachability and induced subgraphs") {
    Dag g;
    g.nodes = {0, 1, 2, 3, 4};
    g.parents = {{0, {1, 2}}, {1, {3}}, {2, {}}, {3, {}}, {4, {}}};
    g.labels = {0};
    CHECK(g.ancestors(0) == VarSet{1, 2, 3});
    CHECK(g.reaches(3, 0));
    CHECK_FALSE(g.reaches(0, 3));
    CHECK(g.edge_count() == 3);
    const auto sub = g.induced({0, 2, 3});
    CHECK(sub.parents_of(0) == VarSet{2});
    CHECK(sub.parents_of(3).empty());
    CHECK(sub.labels == std::vector<VarId>{0});
}

TEST_CASE("learning is deterministic for a fixed dataset and seed") {
    Rng rng(17);
    const auto ds = testing::random_dependent_dataset(rng, 8, 200, 3);
    std::vector<VarId> vars{0, 1, 2, 3, 4, 5, 6, 7};
    ScoreCache c1;
    ScoreCache c2;
    const auto a = select_parents(explore_all(ds, vars, {}, c1, 2), {3}, 99);
    const auto b = select_parents(explore_all(ds, vars, {}, c2, 1), {3}, 99);
    CHECK(a == b);
}
