#include "rcbn/simd/kernels.hpp"

#include <cassert>

namespace rcbn::simd::scalar {

void compose_index(std::span<std::uint32_t> index, std::span<const std::uint32_t> codes,
                   std::uint32_t radix) {
    assert(index.size() == codes.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        index[i] = index[i] * radix + codes[i];
    }
}

void gather_multiply(std::span<double> dst, std::span<const double> src,
                     std::span<const std::uint32_t> gather) {
    assert(dst.size() == gather.size());
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] *= src[gather[i]];
    }
}

void multiply(std::span<double> dst, std::span<const double> src) {
    assert(dst.size() == src.size());
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] *= src[i];
    }
}

void scale(std::span<double> values, double factor) {
    for (double& v : values) {
        v *= factor;
    }
}

double sum(std::span<const double> values) {
    double total = 0.0;
    for (double v : values) {
        total += v;
    }
    return total;
}

}  // namespace rcbn::simd::scalar
