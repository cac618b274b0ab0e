#include "rcbn/simd/kernels.hpp"

#include <cassert>

#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>
#define RCBN_HAVE_NEON 1
#else
#define RCBN_HAVE_NEON 0
#endif

namespace rcbn::simd::neon {

#if RCBN_HAVE_NEON

bool available() { return true; }

void compose_index(std::span<std::uint32_t> index, std::span<const std::uint32_t> codes,
                   std::uint32_t radix) {
    assert(index.size() == codes.size());
    const std::size_t n = index.size();
    const uint32x4_t r = vdupq_n_u32(radix);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const uint32x4_t cur = vld1q_u32(index.data() + i);
        const uint32x4_t add = vld1q_u32(codes.data() + i);
        vst1q_u32(index.data() + i, vmlaq_u32(add, cur, r));
    }
    for (; i < n; ++i) {
        index[i] = index[i] * radix + codes[i];
    }
}

// No hardware gather on NEON; the scalar loop is what the compiler would emit anyway.
void gather_multiply(std::span<double> dst, std::span<const double> src,
                     std::span<const std::uint32_t> gather) {
    scalar::gather_multiply(dst, src, gather);
}

void multiply(std::span<double> dst, std::span<const double> src) {
    assert(dst.size() == src.size());
    const std::size_t n = dst.size();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(dst.data() + i, vmulq_f64(vld1q_f64(dst.data() + i), vld1q_f64(src.data() + i)));
    }
    for (; i < n; ++i) {
        dst[i] *= src[i];
    }
}

void scale(std::span<double> values, double factor) {
    const std::size_t n = values.size();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(values.data() + i, vmulq_n_f64(vld1q_f64(values.data() + i), factor));
    }
    for (; i < n; ++i) {
        values[i] *= factor;
    }
}

double sum(std::span<const double> values) {
    const std::size_t n = values.size();
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vaddq_f64(acc0, vld1q_f64(values.data() + i));
        acc1 = vaddq_f64(acc1, vld1q_f64(values.data() + i + 2));
    }
    double total = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) {
        total += values[i];
    }
    return total;
}

#else

bool available() { return false; }
void compose_index(std::span<std::uint32_t> index, std::span<const std::uint32_t> codes,
                   std::uint32_t radix) {
    scalar::compose_index(index, codes, radix);
}
void gather_multiply(std::span<double> dst, std::span<const double> src,
                     std::span<const std::uint32_t> gather) {
    scalar::gather_multiply(dst, src, gather);
}
void multiply(std::span<double> dst, std::span<const double> src) { scalar::multiply(dst, src); }
void scale(std::span<double> values, double factor) { scalar::scale(values, factor); }
double sum(std::span<const double> values) { return scalar::sum(values); }

#endif

}  // namespace rcbn::simd::neon
