#pragma once

// Data-parallel inner loops shared by the convolution layers, dense layers
// and the DTW cost matrix. Each kernel has a scalar reference version and
// vectorized versions; the active table is chosen once at startup from the
// CPU features and may be overridden with SRS_SIMD=scalar|avx2|neon.
//
// axpy and sq_diff_accumulate are elementwise and bit-identical across
// tables; dot and sq_dist reassociate the sum and agree to rounding.

#include <cstddef>
#include <string_view>

namespace srs::simd {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
    Isa isa;
    // sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n) noexcept;
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n) noexcept;
    // out[j] += (v - s[j])^2
    void (*sq_diff_accumulate)(double v, const double* s, double* out, std::size_t n) noexcept;
    // sum_i (a[i] - b[i])^2
    double (*sq_dist)(const double* a, const double* b, std::size_t n) noexcept;
};

const KernelTable& scalar_kernels() noexcept;
#if defined(SRS_HAVE_AVX2)
const KernelTable& avx2_kernels() noexcept;
#endif
#if defined(SRS_HAVE_NEON)
const KernelTable& neon_kernels() noexcept;
#endif

/// Kernels for `isa`, or nullptr when this build or CPU cannot run them.
const KernelTable* kernels_for(Isa isa) noexcept;

/// The table selected for this process.
const KernelTable& active() noexcept;

/// Force a specific table (used by equivalence tests and benchmarks).
/// Returns false if the ISA is unavailable; the active table is unchanged then.
bool set_active(Isa isa) noexcept;

std::string_view isa_name(Isa isa) noexcept;

inline double dot(const double* a, const double* b, std::size_t n) noexcept { return active().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept { active().axpy(alpha, x, y, n); }
inline void sq_diff_accumulate(double v, const double* s, double* out, std::size_t n) noexcept {
    active().sq_diff_accumulate(v, s, out, n);
}
inline double sq_dist(const double* a, const double* b, std::size_t n) noexcept { return active().sq_dist(a, b, n); }

}  // namespace srs::simd
