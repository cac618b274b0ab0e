#include "rcbn/simd/kernels.hpp"

#include <cassert>

#if defined(__x86_64__) && defined(__AVX2__)
#include <immintrin.h>
#define RCBN_HAVE_AVX2 1
#else
#define RCBN_HAVE_AVX2 0
#endif

namespace rcbn::simd::avx2 {

#if RCBN_HAVE_AVX2

bool available() {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
}

void compose_index(std::span<std::uint32_t> index, std::span<const std::uint32_t> codes,
                   std::uint32_t radix) {
    assert(index.size() == codes.size());
    const std::size_t n = index.size();
    const __m256i r = _mm256_set1_epi32(static_cast<int>(radix));
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        auto* dst = reinterpret_cast<__m256i*>(index.data() + i);
        const __m256i cur = _mm256_loadu_si256(dst);
        const __m256i add = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(codes.data() + i));
        // mullo keeps the low 32 bits, matching unsigned wraparound in the scalar path
        _mm256_storeu_si256(dst, _mm256_add_epi32(_mm256_mullo_epi32(cur, r), add));
    }
    for (; i < n; ++i) {
        index[i] = index[i] * radix + codes[i];
    }
}

void gather_multiply(std::span<double> dst, std::span<const double> src,
                     std::span<const std::uint32_t> gather) {
    assert(dst.size() == gather.size());
    const std::size_t n = dst.size();
    std::size_t i = 0;
    if (src.size() <= 0x7fffffffu) {
        for (; i + 4 <= n; i += 4) {
            const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(gather.data() + i));
            const __m256d g = _mm256_i32gather_pd(src.data(), idx, 8);
            const __m256d d = _mm256_loadu_pd(dst.data() + i);
            _mm256_storeu_pd(dst.data() + i, _mm256_mul_pd(d, g));
        }
    }
    for (; i < n; ++i) {
        dst[i] *= src[gather[i]];
    }
}

void multiply(std::span<double> dst, std::span<const double> src) {
    assert(dst.size() == src.size());
    const std::size_t n = dst.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d a = _mm256_loadu_pd(dst.data() + i);
        const __m256d b = _mm256_loadu_pd(src.data() + i);
        _mm256_storeu_pd(dst.data() + i, _mm256_mul_pd(a, b));
    }
    for (; i < n; ++i) {
        dst[i] *= src[i];
    }
}

void scale(std::span<double> values, double factor) {
    const std::size_t n = values.size();
    const __m256d f = _mm256_set1_pd(factor);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(values.data() + i, _mm256_mul_pd(_mm256_loadu_pd(values.data() + i), f));
    }
    for (; i < n; ++i) {
        values[i] *= factor;
    }
}

double sum(std::span<const double> values) {
    const std::size_t n = values.size();
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(values.data() + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(values.data() + i + 4));
    }
    acc0 = _mm256_add_pd(acc0, acc1);
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc0);
    double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
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

}  // namespace rcbn::simd::avx2
