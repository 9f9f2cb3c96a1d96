#include "srs/loess.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "srs/errors.hpp"

namespace srs::stl {
namespace {

inline double tricube(double u) noexcept {
    if (u >= 1.0) return 0.0;
    const double a = 1.0 - u * u * u;
    return a * a * a;
}

// Solves the (degree+1)-square system in place; false when singular.
template <std::size_t N>
bool solve(std::array<std::array<double, N>, N>& a, std::array<double, N>& b, std::size_t dim) {
    for (std::size_t col = 0; col < dim; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < dim; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        if (std::abs(a[piv][col]) < 1e-12) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < dim; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t k = col; k < dim; ++k) a[r][k] -= f * a[col][k];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t i = dim; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < dim; ++k) s -= a[i][k] * b[k];
        b[i] = s / a[i][i];
    }
    return true;
}

}  // namespace

double local_fit(std::span<const double> y, std::span<const double> robustness, double x0, std::size_t q, int degree) {
    const std::size_t L = y.size();
    if (L == 0) throw ValidationError("loess: empty input");
    q = std::max<std::size_t>(q, 1);

    // Nearest window [left, right] of min(q, L) points.
    const std::size_t width = std::min(q, L);
    std::size_t left = 0;
    if (width < L) {
        const double start = std::floor(x0) - static_cast<double>((width - 1) / 2);
        left = static_cast<std::size_t>(std::clamp(start, 0.0, static_cast<double>(L - width)));
        while (left + width < L && x0 - static_cast<double>(left) > static_cast<double>(left + width) - x0) ++left;
        while (left > 0 && static_cast<double>(left + width - 1) - x0 > x0 - static_cast<double>(left - 1)) --left;
    }
    const std::size_t right = left + width - 1;
    double h = std::max(x0 - static_cast<double>(left), static_cast<double>(right) - x0);
    if (q > L) h += static_cast<double>(q - L) / 2.0;

    // Weighted sums of (x - x0)^k and y (x - x0)^k, k <= 2 * degree.
    std::array<double, 5> m{};
    std::array<double, 3> my{};
    const std::size_t dim = static_cast<std::size_t>(degree) + 1;
    double wsum = 0.0;
    for (std::size_t i = left; i <= right; ++i) {
        const double d = static_cast<double>(i) - x0;
        double w = h > 0.0 ? tricube(std::abs(d) / h) : (d == 0.0 ? 1.0 : 0.0);
        if (!robustness.empty()) w *= robustness[i];
        if (w <= 0.0) continue;
        wsum += w;
        double p = w;
        for (std::size_t k = 0; k < 2 * dim - 1; ++k) {
            m[k] += p;
            if (k < dim) my[k] += p * y[i];
            p *= d;
        }
    }
    if (wsum <= 0.0) {
        // Every neighbour was down-weighted to zero; use the plain window mean.
        double s = 0.0;
        for (std::size_t i = left; i <= right; ++i) s += y[i];
        return s / static_cast<double>(width);
    }
    for (std::size_t deg = dim; deg >= 1; --deg) {
        std::array<std::array<double, 3>, 3> a{};
        std::array<double, 3> b{};
        for (std::size_t r = 0; r < deg; ++r) {
            for (std::size_t c = 0; c < deg; ++c) a[r][c] = m[r + c];
            b[r] = my[r];
        }
        if (deg == 1) return my[0] / m[0];
        // Scale-aware singularity check: a tiny spread of x around x0 makes the
        // slope unidentifiable.
        const double spread = m[2] / m[0] - (m[1] / m[0]) * (m[1] / m[0]);
        if (spread > 1e-10 && solve<3>(a, b, deg)) return b[0];
    }
    return my[0] / m[0];
}

std::vector<double> bisquare_weights(std::span<const double> residuals) {
    const std::size_t n = residuals.size();
    std::vector<double> absr(n);
    for (std::size_t i = 0; i < n; ++i) absr[i] = std::abs(residuals[i]);
    std::vector<double> sorted = absr;
    double median = 0.0;
    if (n > 0) {
        const std::size_t mid = n / 2;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
        median = sorted[mid];
        if (n % 2 == 0) {
            const double lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid));
            median = 0.5 * (median + lower);
        }
    }
    const double cmad = 6.0 * median;
    const double c9 = 0.999 * cmad;
    const double c1 = 0.001 * cmad;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = absr[i];
        if (r <= c1) {
            w[i] = 1.0;
        } else if (r <= c9) {
            const double u = r / cmad;
            w[i] = (1.0 - u * u) * (1.0 - u * u);
        } else {
            w[i] = 0.0;
        }
    }
    return w;
}

std::vector<double> loess_smooth(std::span<const double> series, double span, int degree, int robustness_iters) {
    const std::size_t L = series.size();
    if (!(span > 0.0 && span <= 1.0)) throw ValidationError("loess: span must lie in (0, 1]");
    if (degree != 1 && degree != 2) throw ValidationError("loess: degree must be 1 or 2");
    if (robustness_iters < 0) throw ValidationError("loess: robustness iterations must be >= 0");
    if (L < 4) throw ValidationError("loess: need at least 4 points");
    const auto q = static_cast<std::size_t>(std::ceil(span * static_cast<double>(L)));
    if (q < static_cast<std::size_t>(degree) + 1) throw ValidationError("loess: span too small for degree");
    for (double v : series) {
        if (!std::isfinite(v)) throw ValidationError("loess: non-finite input");
    }

    std::vector<double> fit(L);
    std::vector<double> robust;
    for (int iter = 0; iter <= robustness_iters; ++iter) {
        for (std::size_t i = 0; i < L; ++i) fit[i] = local_fit(series, robust, static_cast<double>(i), q, degree);
        if (iter == robustness_iters) break;
        std::vector<double> resid(L);
        for (std::size_t i = 0; i < L; ++i) resid[i] = series[i] - fit[i];
        robust = bisquare_weights(resid);
    }
    return fit;
}

}  // namespace srs::stl
