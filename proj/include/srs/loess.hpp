#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace srs::stl {

/// Local weighted polynomial fit at position `x0` over the points
/// (0, y[0]) ... (L-1, y[L-1]), using the `q` nearest points, tricube
/// distance weights and optional per-point robustness weights. When q > L
/// the bandwidth is widened by (q - L) / 2 as in classic STL. Falls back to a
/// lower degree when the local system is singular.
double local_fit(std::span<const double> y, std::span<const double> robustness, double x0, std::size_t q, int degree);

/// Smooths `series` at every index with a neighbourhood of ceil(span * L)
/// points. Each robustness iteration re-weights points by the bisquare of
/// their residual scaled by six median absolute residuals.
std::vector<double> loess_smooth(std::span<const double> series, double span, int degree, int robustness_iters);

/// Bisquare robustness weights from residuals (classic STL thresholds).
std::vector<double> bisquare_weights(std::span<const double> residuals);

}  // namespace srs::stl
