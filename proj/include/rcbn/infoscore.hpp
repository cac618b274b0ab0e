#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <shared_mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "rcbn/dataset.hpp"
#include "rcbn/util.hpp"

namespace rcbn {

/// Joint state of a variable set, one code per row, densely numbered in [0, n_states).
/// When the full product of cardinalities would not fit the counting range the
/// codes are re-ranked, so a code is then an opaque configuration id.
struct JointCodes {
    std::vector<std::uint32_t> codes;
    std::uint64_t n_states = 1;
};

JointCodes joint_codes(const Dataset& ds, const VarSet& vars);

/// Counts of (parent configuration, child state). Only parent configurations
/// seen in the data are stored; each owns a row of child_card counts.
struct ContingencyTable {
    VarId child = -1;
    VarSet parents;
    std::uint32_t child_card = 1;
    std::vector<std::uint32_t> configs;
    std::vector<std::uint32_t> counts;
    std::size_t n = 0;

    std::size_t n_configs() const { return configs.size(); }
    std::span<const std::uint32_t> row(std::size_t k) const {
        return {counts.data() + k * child_card, child_card};
    }
};

/// Rows whose child or parent code is kUnobserved are skipped.
ContingencyTable contingency(const Dataset& ds, VarId child, const VarSet& parents);

double entropy(const Dataset& ds, VarId x);
double conditional_entropy(const Dataset& ds, VarId x, const VarSet& cond);
double mutual_information(const Dataset& ds, VarId x, const VarSet& y);
/// I(D,E)/H(D) with E taken as one joint variable; 0 when H(D) = 0.
double uncertainty_coefficient(const Dataset& ds, VarId d, const VarSet& e);

/// Same quantities from a prebuilt table (child = X, parents = conditioning set).
double entropy_of_counts(std::span<const std::uint64_t> counts);
double conditional_entropy(const ContingencyTable& t);
double mutual_information(const ContingencyTable& t);

class CacheMiss : public InternalError {
public:
    using InternalError::InternalError;
};

/// Thread-safe map (child, canonical parent set) -> exact BIC.
class ScoreCache {
public:
    std::optional<double> lookup(VarId child, const VarSet& parents) const;
    void store(VarId child, const VarSet& parents, double score);
    std::size_t size() const;

private:
    struct Key {
        VarId child;
        VarSet parents;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept;
    };
    mutable std::shared_mutex mutex_;
    std::unordered_map<Key, double, KeyHash> scores_;
};

/// BIC(X|parents) in nats: log-likelihood under MLE minus (ln n / 2) q (r - 1).
/// Larger is better. Throws UsageError if x is among the parents.
double bic(const Dataset& ds, VarId x, const VarSet& parents, ScoreCache& cache);
double bic_uncached(const Dataset& ds, VarId x, const VarSet& parents);

/// BIC(x|s1) + BIC(x|s2) - BIC(x|empty) from cached exact scores.
/// Throws CacheMiss if any of the three is absent, UsageError if s1 and s2 overlap.
double bic_star(VarId x, const VarSet& s1, const VarSet& s2, const ScoreCache& cache);

}  // namespace rcbn
