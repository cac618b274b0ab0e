#include "rcbn/infoscore.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "rcbn/simd/kernels.hpp"

namespace rcbn {

namespace {

// Joint codes are counted in a dense array; beyond this many states (and
// beyond a few per row) the codes are re-ranked instead.
constexpr std::uint64_t kDenseFloor = 1ULL << 16;

std::uint64_t dense_limit(std::size_t n_rows) {
    return std::max<std::uint64_t>(kDenseFloor, 4ULL * n_rows);
}

// Replaces codes by their rank among the distinct values present.
std::uint64_t rerank(std::vector<std::uint32_t>& codes) {
    std::vector<std::uint32_t> distinct(codes);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (auto& c : codes) {
        c = static_cast<std::uint32_t>(std::lower_bound(distinct.begin(), distinct.end(), c) -
                                       distinct.begin());
    }
    return distinct.size();
}

bool has_unobserved(std::span<const std::uint32_t> col) {
    return std::find(col.begin(), col.end(), kUnobserved) != col.end();
}

}  // namespace

JointCodes joint_codes(const Dataset& ds, const VarSet& vars) {
    JointCodes out;
    out.codes.assign(ds.n_rows(), 0);
    const auto& k = simd::kernels();
    const std::uint64_t limit = dense_limit(ds.n_rows());
    for (VarId v : vars) {
        const std::uint64_t card = ds.cardinality(v);
        if (out.n_states * card > limit) {
            out.n_states = rerank(out.codes);
        }
        k.compose_index(out.codes, ds.column(v), static_cast<std::uint32_t>(card));
        out.n_states *= card;
    }
    return out;
}

ContingencyTable contingency(const Dataset& ds, VarId child, const VarSet& parents) {
    ContingencyTable t;
    t.child = child;
    t.parents = parents;
    t.child_card = ds.cardinality(child);

    // Unobserved cells only occur in tables encoded against a schema; mask those rows.
    std::vector<std::size_t> keep;
    bool masked = has_unobserved(ds.column(child));
    for (VarId p : parents) {
        masked = masked || has_unobserved(ds.column(p));
    }
    const Dataset* source = &ds;
    Dataset filtered;
    if (masked) {
        for (std::size_t r = 0; r < ds.n_rows(); ++r) {
            bool ok = ds.column(child)[r] != kUnobserved;
            for (VarId p : parents) {
                ok = ok && ds.column(p)[r] != kUnobserved;
            }
            if (ok) {
                keep.push_back(r);
            }
        }
        filtered = ds.select_rows(keep);
        source = &filtered;
    }

    auto joint = joint_codes(*source, parents);
    if (joint.n_states * t.child_card > dense_limit(source->n_rows())) {
        joint.n_states = rerank(joint.codes);
    }
    const std::size_t r = t.child_card;
    std::vector<std::uint32_t> dense(static_cast<std::size_t>(joint.n_states) * r, 0);
    const auto child_col = source->column(child);
    for (std::size_t i = 0; i < joint.codes.size(); ++i) {
        ++dense[static_cast<std::size_t>(joint.codes[i]) * r + child_col[i]];
    }
    for (std::size_t s = 0; s < joint.n_states; ++s) {
        const auto first = dense.begin() + static_cast<std::ptrdiff_t>(s * r);
        if (std::any_of(first, first + static_cast<std::ptrdiff_t>(r), [](std::uint32_t c) { return c != 0; })) {
            t.configs.push_back(static_cast<std::uint32_t>(s));
            t.counts.insert(t.counts.end(), first, first + static_cast<std::ptrdiff_t>(r));
        }
    }
    t.n = source->n_rows();
    return t;
}

double entropy_of_counts(std::span<const std::uint64_t> counts) {
    std::uint64_t n = 0;
    for (auto c : counts) {
        n += c;
    }
    if (n == 0) {
        return 0.0;
    }
    const double total = static_cast<double>(n);
    double h = 0.0;
    for (auto c : counts) {
        if (c > 0) {
            h += static_cast<double>(c) * std::log(total / static_cast<double>(c));
        }
    }
    return h / total;
}

double conditional_entropy(const ContingencyTable& t) {
    if (t.n == 0) {
        return 0.0;
    }
    double h = 0.0;
    for (std::size_t k = 0; k < t.n_configs(); ++k) {
        const auto row = t.row(k);
        std::uint64_t ny = 0;
        for (auto c : row) {
            ny += c;
        }
        for (auto c : row) {
            if (c > 0) {
                h += static_cast<double>(c) * std::log(static_cast<double>(ny) / static_cast<double>(c));
            }
        }
    }
    return h / static_cast<double>(t.n);
}

double mutual_information(const ContingencyTable& t) {
    if (t.n == 0) {
        return 0.0;
    }
    std::vector<std::uint64_t> nx(t.child_card, 0);
    for (std::size_t k = 0; k < t.n_configs(); ++k) {
        const auto row = t.row(k);
        for (std::size_t x = 0; x < row.size(); ++x) {
            nx[x] += row[x];
        }
    }
    const double n = static_cast<double>(t.n);
    double mi = 0.0;
    for (std::size_t k = 0; k < t.n_configs(); ++k) {
        const auto row = t.row(k);
        std::uint64_t ny = 0;
        for (auto c : row) {
            ny += c;
        }
        for (std::size_t x = 0; x < row.size(); ++x) {
            if (row[x] > 0) {
                const double c = row[x];
                mi += c * std::log((c * n) / (static_cast<double>(nx[x]) * static_cast<double>(ny)));
            }
        }
    }
    mi /= n;
    // floating-point residue around an exact zero
    if (mi < 0.0 && mi > -1e-12) {
        mi = 0.0;
    }
    return mi;
}

double entropy(const Dataset& ds, VarId x) {
    std::vector<std::uint64_t> counts(ds.cardinality(x), 0);
    for (auto c : ds.column(x)) {
        if (c != kUnobserved) {
            ++counts[c];
        }
    }
    return entropy_of_counts(counts);
}

double conditional_entropy(const Dataset& ds, VarId x, const VarSet& cond) {
    if (contains(canonical(cond), x)) {
        throw UsageError("conditional_entropy: x is in the conditioning set");
    }
    if (cond.empty()) {
        return entropy(ds, x);
    }
    return conditional_entropy(contingency(ds, x, canonical(cond)));
}

double mutual_information(const Dataset& ds, VarId x, const VarSet& y) {
    if (contains(canonical(y), x)) {
        throw UsageError("mutual_information: x is in y");
    }
    if (y.empty()) {
        return 0.0;
    }
    return mutual_information(contingency(ds, x, canonical(y)));
}

double uncertainty_coefficient(const Dataset& ds, VarId d, const VarSet& e) {
    if (e.empty()) {
        return 0.0;
    }
    const auto set = canonical(e);
    if (contains(set, d)) {
        throw UsageError("uncertainty_coefficient: d is in e");
    }
    const auto t = contingency(ds, d, set);
    std::vector<std::uint64_t> nd(t.child_card, 0);
    for (std::size_t k = 0; k < t.n_configs(); ++k) {
        const auto row = t.row(k);
        for (std::size_t x = 0; x < row.size(); ++x) {
            nd[x] += row[x];
        }
    }
    const double h = entropy_of_counts(nd);
    if (h <= 0.0) {
        return 0.0;
    }
    const double u = mutual_information(t) / h;
    return std::clamp(u, 0.0, 1.0);
}

std::size_t ScoreCache::KeyHash::operator()(const Key& k) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ static_cast<std::uint64_t>(k.child);
    for (VarId v : k.parents) {
        h = (h ^ static_cast<std::uint64_t>(v)) * 0x100000001b3ULL;
        h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
}

std::optional<double> ScoreCache::lookup(VarId child, const VarSet& parents) const {
    std::shared_lock lock(mutex_);
    const auto it = scores_.find(Key{child, parents});
    if (it == scores_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void ScoreCache::store(VarId child, const VarSet& parents, double score) {
    std::unique_lock lock(mutex_);
    scores_.insert_or_assign(Key{child, parents}, score);
}

std::size_t ScoreCache::size() const {
    std::shared_lock lock(mutex_);
    return scores_.size();
}

double bic_uncached(const Dataset& ds, VarId x, const VarSet& parents) {
    const auto set = canonical(parents);
    if (contains(set, x)) {
        throw UsageError("bic: variable '" + ds.variable(x).name + "' proposed as its own parent");
    }
    const auto t = contingency(ds, x, set);
    double ll = 0.0;
    for (std::size_t k = 0; k < t.n_configs(); ++k) {
        const auto row = t.row(k);
        std::uint64_t ny = 0;
        for (auto c : row) {
            ny += c;
        }
        for (auto c : row) {
            if (c > 0) {
                ll += static_cast<double>(c) * std::log(static_cast<double>(c) / static_cast<double>(ny));
            }
        }
    }
    double q = 1.0;
    for (VarId p : set) {
        q *= ds.cardinality(p);
    }
    const double r = ds.cardinality(x);
    const double n = static_cast<double>(t.n);
    const double penalty = n > 1.0 ? 0.5 * std::log(n) * q * (r - 1.0) : 0.0;
    return ll - penalty;
}

double bic(const Dataset& ds, VarId x, const VarSet& parents, ScoreCache& cache) {
    const auto set = canonical(parents);
    if (contains(set, x)) {
        throw UsageError("bic: variable '" + ds.variable(x).name + "' proposed as its own parent");
    }
    if (auto hit = cache.lookup(x, set)) {
        return *hit;
    }
    const double score = bic_uncached(ds, x, set);
    cache.store(x, set, score);
    return score;
}

double bic_star(VarId x, const VarSet& s1, const VarSet& s2, const ScoreCache& cache) {
    const auto a = canonical(s1);
    const auto b = canonical(s2);
    if (!disjoint(a, b)) {
        throw UsageError("bic_star: parent sets overlap");
    }
    auto fetch = [&](const VarSet& s) {
        auto v = cache.lookup(x, s);
        if (!v) {
            throw CacheMiss("bic_star: no cached score for child " + std::to_string(x) +
                            " with parent set of size " + std::to_string(s.size()));
        }
        return *v;
    };
    const double empty = fetch({});
    const double sa = fetch(a);
    const double sb = fetch(b);
    if (b.empty()) {
        return sa;
    }
    if (a.empty()) {
        return sb;
    }
    return sa + sb - empty;
}

}  // namespace rcbn
