#include "srs/dtw.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>

#include "srs/errors.hpp"
#include "srs/simd/kernels.hpp"

namespace srs::align {
namespace {

void check_shapes(const TimeSeries& x, const TimeSeries& s) {
    if (x.channels() != s.channels()) throw ShapeError("dtw: channel counts differ");
    if (x.length() == 0 || s.length() == 0) throw ShapeError("dtw: empty series");
}

enum class Step : std::uint8_t { Start, Diagonal, FromLeft, FromUp };

}  // namespace

std::vector<double> pointwise_costs(const TimeSeries& x, const TimeSeries& s) {
    check_shapes(x, s);
    const std::size_t tx = x.length();
    const std::size_t ts = s.length();
    std::vector<double> cost(tx * ts, 0.0);
    const auto& k = simd::active();
    for (std::size_t c = 0; c < x.channels(); ++c) {
        const double* srow = s.channel(c).data();
        auto xc = x.channel(c);
        for (std::size_t i = 0; i < tx; ++i) k.sq_diff_accumulate(xc[i], srow, cost.data() + i * ts, ts);
    }
    return cost;
}

WarpPath dtw(const TimeSeries& x, const TimeSeries& s) {
    const std::vector<double> cost = pointwise_costs(x, s);
    const std::size_t tx = x.length();
    const std::size_t ts = s.length();
    std::vector<double> acc(tx * ts);
    std::vector<Step> from(tx * ts);
    for (std::size_t i = 0; i < tx; ++i) {
        for (std::size_t j = 0; j < ts; ++j) {
            const std::size_t at = i * ts + j;
            if (i == 0 && j == 0) {
                acc[at] = cost[at];
                from[at] = Step::Start;
                continue;
            }
            double best = std::numeric_limits<double>::infinity();
            Step step = Step::Start;
            if (i > 0 && j > 0) {
                best = acc[at - ts - 1];
                step = Step::Diagonal;
            }
            if (j > 0 && acc[at - 1] < best) {
                best = acc[at - 1];
                step = Step::FromLeft;
            }
            if (i > 0 && acc[at - ts] < best) {
                best = acc[at - ts];
                step = Step::FromUp;
            }
            acc[at] = best + cost[at];
            from[at] = step;
        }
    }

    WarpPath path;
    path.cost = acc.back();
    std::size_t i = tx - 1;
    std::size_t j = ts - 1;
    path.pairs.emplace_back(i, j);
    while (i != 0 || j != 0) {
        switch (from[i * ts + j]) {
            case Step::Diagonal: --i; --j; break;
            case Step::FromLeft: --j; break;
            case Step::FromUp: --i; break;
            case Step::Start: break;
        }
        path.pairs.emplace_back(i, j);
    }
    std::reverse(path.pairs.begin(), path.pairs.end());
    return path;
}

double dtw_cost(const TimeSeries& x, const TimeSeries& s) {
    const std::vector<double> cost = pointwise_costs(x, s);
    const std::size_t ts = s.length();
    std::vector<double> prev(ts);
    std::vector<double> cur(ts);
    for (std::size_t i = 0; i < x.length(); ++i) {
        const double* row = cost.data() + i * ts;
        for (std::size_t j = 0; j < ts; ++j) {
            double best;
            if (i == 0 && j == 0) {
                best = 0.0;
            } else {
                best = std::numeric_limits<double>::infinity();
                if (i > 0 && j > 0) best = prev[j - 1];
                if (j > 0) best = std::min(best, cur[j - 1]);
                if (i > 0) best = std::min(best, prev[j]);
            }
            cur[j] = best + row[j];
        }
        std::swap(prev, cur);
    }
    return prev[ts - 1];
}

}  // namespace srs::align
