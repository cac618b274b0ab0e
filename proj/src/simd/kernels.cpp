#include "rcbn/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace rcbn::simd {

namespace {

constexpr KernelTable kScalar{Level::Scalar, scalar::compose_index, scalar::gather_multiply,
                              scalar::multiply, scalar::scale, scalar::sum};
constexpr KernelTable kAvx2{Level::Avx2, avx2::compose_index, avx2::gather_multiply,
                            avx2::multiply, avx2::scale, avx2::sum};
constexpr KernelTable kNeon{Level::Neon, neon::compose_index, neon::gather_multiply,
                            neon::multiply, neon::scale, neon::sum};

Level initial_level() {
    if (const char* env = std::getenv("RCBN_SIMD")) {
        if (std::string(env) == "scalar") {
            return Level::Scalar;
        }
    }
    return detect_level();
}

std::atomic<const KernelTable*>& active() {
    static std::atomic<const KernelTable*> table{&table_for(initial_level())};
    return table;
}

}  // namespace

Level detect_level() {
    if (avx2::available()) {
        return Level::Avx2;
    }
    if (neon::available()) {
        return Level::Neon;
    }
    return Level::Scalar;
}

const KernelTable& table_for(Level level) {
    switch (level) {
    case Level::Avx2:
        return avx2::available() ? kAvx2 : kScalar;
    case Level::Neon:
        return neon::available() ? kNeon : kScalar;
    case Level::Scalar:
        break;
    }
    return kScalar;
}

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

void set_level(Level level) { active().store(&table_for(level), std::memory_order_release); }

std::string_view level_name(Level level) {
    switch (level) {
    case Level::Avx2:
        return "avx2";
    case Level::Neon:
        return "neon";
    case Level::Scalar:
        break;
    }
    return "scalar";
}

}  // namespace rcbn::simd
