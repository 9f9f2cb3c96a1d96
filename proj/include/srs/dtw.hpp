#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "srs/dataset.hpp"

namespace srs::align {

/// Monotone unit-step alignment from (0, 0) to (Tx-1, Ts-1); `cost` is the
/// sum of squared Euclidean distances (over channels) along the path.
struct WarpPath {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    double cost = 0.0;
};

/// Squared Euclidean distance between every step of x and every step of s,
/// row-major Tx x Ts.
std::vector<double> pointwise_costs(const TimeSeries& x, const TimeSeries& s);

/// Globally optimal DTW path. Ties prefer the diagonal predecessor, then
/// (i, j-1), then (i-1, j).
WarpPath dtw(const TimeSeries& x, const TimeSeries& s);

/// Optimal cost only; no path bookkeeping.
double dtw_cost(const TimeSeries& x, const TimeSeries& s);

}  // namespace srs::align
