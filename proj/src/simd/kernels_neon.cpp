#include <arm_neon.h>

#include "srs/simd/kernels.hpp"

namespace srs::simd {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) noexcept {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    double r = vaddvq_f64(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) noexcept {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void sq_diff_accumulate_neon(double v, const double* s, double* out, std::size_t n) noexcept {
    const float64x2_t vv = vdupq_n_f64(v);
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
        const float64x2_t d = vsubq_f64(vv, vld1q_f64(s + j));
        vst1q_f64(out + j, vaddq_f64(vld1q_f64(out + j), vmulq_f64(d, d)));
    }
    for (; j < n; ++j) {
        const double d = v - s[j];
        out[j] += d * d;
    }
}

double sq_dist_neon(const double* a, const double* b, std::size_t n) noexcept {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        acc = vfmaq_f64(acc, d, d);
    }
    double r = vaddvq_f64(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        r += d * d;
    }
    return r;
}

}  // namespace

const KernelTable& neon_kernels() noexcept {
    static const KernelTable table{Isa::Neon, dot_neon, axpy_neon, sq_diff_accumulate_neon, sq_dist_neon};
    return table;
}

}  // namespace srs::simd
