#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rcbn {

/// Invalid input, configuration, or precondition. The CLI maps it to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Internal invariant broken. The CLI maps it to exit code 1.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

using VarId = int;
/// Sorted, duplicate-free list of variable ids.
using VarSet = std::vector<VarId>;

VarSet canonical(VarSet s);
VarSet set_union(const VarSet& a, const VarSet& b);
VarSet set_intersection(const VarSet& a, const VarSet& b);
bool disjoint(const VarSet& a, const VarSet& b);
bool contains(const VarSet& s, VarId v);

/// Deterministic random source. Wraps mt19937_64 (whose output sequence is
/// fixed by the standard) with portable draws, since std distributions are
/// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform integer in [0, bound), bound > 0. Unbiased (rejection).
    std::uint64_t below(std::uint64_t bound);
    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    /// Child stream derived from this seed and a stream id; does not advance this generator.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

private:
    std::mt19937_64 engine_;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);
std::string hash_hex(std::string_view bytes);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. jobs <= 1 runs inline.
/// The first exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

int default_jobs();

/// Natural-log x ln x with 0 ln 0 = 0.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace rcbn
