#pragma once

// Data-parallel inner loops used by scoring and inference.
//
// Every kernel has a scalar reference implementation. Vector variants
// (AVX2 on x86-64, NEON on aarch64) are selected once at runtime and must
// agree with the scalar path: bit-exactly for the integer and elementwise
// kernels, to within reassociation error for the reductions.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace rcbn::simd {

enum class Level { Scalar, Avx2, Neon };

struct KernelTable {
    Level level;
    /// index[i] = index[i] * radix + codes[i]
    void (*compose_index)(std::span<std::uint32_t> index, std::span<const std::uint32_t> codes,
                          std::uint32_t radix);
    /// dst[i] *= src[gather[i]]
    void (*gather_multiply)(std::span<double> dst, std::span<const double> src,
                            std::span<const std::uint32_t> gather);
    /// dst[i] *= src[i]
    void (*multiply)(std::span<double> dst, std::span<const double> src);
    void (*scale)(std::span<double> values, double factor);
    double (*sum)(std::span<const double> values);
};

/// Best level supported by the running CPU and compiled into this binary.
Level detect_level();

/// Table for a specific level; falls back to scalar when unavailable.
const KernelTable& table_for(Level level);

/// Active table. Defaults to detect_level(); RCBN_SIMD=scalar forces the
/// reference path.
const KernelTable& kernels();

/// Overrides the active table (tests, benchmarking).
void set_level(Level level);

std::string_view level_name(Level level);

namespace scalar {
void compose_index(std::span<std::uint32_t> index, std::span<const std::uint32_t> codes,
                   std::uint32_t radix);
void gather_multiply(std::span<double> dst, std::span<const double> src,
                     std::span<const std::uint32_t> gather);
void multiply(std::span<double> dst, std::span<const double> src);
void scale(std::span<double> values, double factor);
double sum(std::span<const double> values);
}  // namespace scalar

namespace avx2 {
bool available();
void compose_index(std::span<std::uint32_t> index, std::span<const std::uint32_t> codes,
                   std::uint32_t radix);
void gather_multiply(std::span<double> dst, std::span<const double> src,
                     std::span<const std::uint32_t> gather);
void multiply(std::span<double> dst, std::span<const double> src);
void scale(std::span<double> values, double factor);
double sum(std::span<const double> values);
}  // namespace avx2

namespace neon {
bool available();
void compose_index(std::span<std::uint32_t> index, std::span<const std::uint32_t> codes,
                   std::uint32_t radix);
void gather_multiply(std::span<double> dst, std::span<const double> src,
                     std::span<const std::uint32_t> gather);
void multiply(std::span<double> dst, std::span<const double> src);
void scale(std::span<double> values, double factor);
double sum(std::span<const double> values);
}  // namespace neon

}  // namespace rcbn::simd
