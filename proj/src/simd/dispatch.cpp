#include <atomic>
#include <cstdlib>
#include <string>

#include "srs/simd/kernels.hpp"

namespace srs::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(SRS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* pick_default() noexcept {
    if (const char* env = std::getenv("SRS_SIMD")) {
        const std::string want(env);
        if (want == "scalar") return &scalar_kernels();
        if (want == "avx2") {
            if (auto* t = kernels_for(Isa::Avx2)) return t;
        }
        if (want == "neon") {
            if (auto* t = kernels_for(Isa::Neon)) return t;
        }
    }
    if (auto* t = kernels_for(Isa::Avx2)) return t;
    if (auto* t = kernels_for(Isa::Neon)) return t;
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& slot() noexcept {
    static std::atomic<const KernelTable*> table{pick_default()};
    return table;
}

}  // namespace

const KernelTable* kernels_for(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar:
            return &scalar_kernels();
        case Isa::Avx2:
#if defined(SRS_HAVE_AVX2)
            if (cpu_has_avx2()) return &avx2_kernels();
#endif
            return nullptr;
        case Isa::Neon:
#if defined(SRS_HAVE_NEON)
            return &neon_kernels();
#else
            return nullptr;
#endif
    }
    return nullptr;
}

const KernelTable& active() noexcept { return *slot().load(std::memory_order_relaxed); }

bool set_active(Isa isa) noexcept {
    const KernelTable* t = kernels_for(isa);
    if (t == nullptr) return false;
    slot().store(t, std::memory_order_relaxed);
    return true;
}

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

}  // namespace srs::simd
