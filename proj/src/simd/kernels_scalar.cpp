#include "srs/simd/kernels.hpp"

namespace srs::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void sq_diff_accumulate_scalar(double v, const double* s, double* out, std::size_t n) noexcept {
    for (std::size_t j = 0; j < n; ++j) {
        const double d = v - s[j];
        out[j] += d * d;
    }
}

double sq_dist_scalar(const double* a, const double* b, std::size_t n) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
    static const KernelTable table{Isa::Scalar, dot_scalar, axpy_scalar, sq_diff_accumulate_scalar, sq_dist_scalar};
    return table;
}

}  // namespace srs::simd
