#include "srs/stl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "srs/dtw.hpp"
#include "srs/errors.hpp"
#include "srs/loess.hpp"

namespace srs::stl {
namespace {

std::size_t next_odd(double v) {
    auto n = static_cast<std::size_t>(std::ceil(v));
    if (n % 2 == 0) ++n;
    return n;
}

std::vector<double> moving_average(std::span<const double> x, std::size_t w) {
    std::vector<double> out(x.size() - w + 1);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < w; ++k) s += x[i + k];
        out[i] = s / static_cast<double>(w);
    }
    return out;
}

// Smooths each cycle-subseries and extends it by one cycle on both sides;
// returns a series of length N + 2 * period.
std::vector<double> cycle_subseries(std::span<const double> detrended, std::span<const double> weights,
                                    std::size_t period, std::size_t window, int degree) {
    const std::size_t cycles = detrended.size() / period;
    std::vector<double> out((cycles + 2) * period);
    std::vector<double> sub(cycles);
    std::vector<double> subw(cycles);
    for (std::size_t phase = 0; phase < period; ++phase) {
        for (std::size_t k = 0; k < cycles; ++k) {
            sub[k] = detrended[k * period + phase];
            subw[k] = weights[k * period + phase];
        }
        for (std::size_t k = 0; k < cycles + 2; ++k) {
            const double x0 = static_cast<double>(k) - 1.0;
            out[k * period + phase] = local_fit(sub, subw, x0, window, degree);
        }
    }
    return out;
}

std::vector<double> smooth_all(std::span<const double> y, std::span<const double> weights, std::size_t window,
                               int degree) {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = local_fit(y, weights, static_cast<double>(i), window, degree);
    return out;
}

}  // namespace

void StlConfig::validate() const {
    if (!(seasonal_span > 0.0 && seasonal_span <= 1.0)) throw ConfigError("stl: seasonal span must lie in (0, 1]");
    for (int d : {seasonal_degree, trend_degree, lowpass_degree}) {
        if (d != 1 && d != 2) throw ConfigError("stl: loess degree must be 1 or 2");
    }
    if (inner_iters < 1) throw ConfigError("stl: inner iterations must be >= 1");
    if (robust_iters < 0) throw ConfigError("stl: robustness iterations must be >= 0");
}

StlWindows resolve_windows(std::size_t period, std::size_t periods, const StlConfig& config) {
    StlWindows w{};
    w.seasonal = std::max<std::size_t>(3, next_odd(config.seasonal_span * static_cast<double>(periods)));
    const double np = static_cast<double>(period);
    w.trend = config.trend_window ? config.trend_window
                                  : next_odd(1.5 * np / (1.0 - 1.5 / static_cast<double>(w.seasonal)));
    w.lowpass = config.lowpass_window ? config.lowpass_window : next_odd(np);
    w.trend = std::max<std::size_t>(w.trend, 3);
    w.lowpass = std::max<std::size_t>(w.lowpass, 3);
    return w;
}

StlResult stl_decompose(std::span<const double> y, std::size_t period, const StlConfig& config) {
    config.validate();
    if (period < 1) throw ValidationError("stl: period must be >= 1");
    if (y.size() % period != 0) throw ValidationError("stl: series length is not a multiple of the period");
    const std::size_t cycles = y.size() / period;
    if (cycles < 2) throw ValidationError("stl: need at least two full periods");
    for (double v : y) {
        if (!std::isfinite(v)) throw ValidationError("stl: non-finite input");
    }

    const std::size_t N = y.size();
    const StlWindows win = resolve_windows(period, cycles, config);

    StlResult r;
    r.seasonal.assign(N, 0.0);
    r.trend.assign(N, 0.0);
    std::vector<double> robust(N, 1.0);
    std::vector<double> work(N);

    for (int outer = 0; outer <= config.robust_iters; ++outer) {
        for (int inner = 0; inner < config.inner_iters; ++inner) {
            for (std::size_t i = 0; i < N; ++i) work[i] = y[i] - r.trend[i];
            const auto cycle = cycle_subseries(work, robust, period, win.seasonal, config.seasonal_degree);

            // Low-pass filter of the cycle-subseries: MA(np), MA(np), MA(3), loess.
            auto lp = moving_average(cycle, period);
            lp = moving_average(lp, period);
            lp = moving_average(lp, 3);
            lp = smooth_all(lp, {}, win.lowpass, config.lowpass_degree);

            for (std::size_t i = 0; i < N; ++i) r.seasonal[i] = cycle[period + i] - lp[i];
            for (std::size_t i = 0; i < N; ++i) work[i] = y[i] - r.seasonal[i];
            r.trend = smooth_all(work, robust, win.trend, config.trend_degree);
        }
        if (outer == config.robust_iters) break;
        for (std::size_t i = 0; i < N; ++i) work[i] = y[i] - r.seasonal[i] - r.trend[i];
        robust = bisquare_weights(work);
    }

    if (config.periodic_seasonal) {
        for (std::size_t phase = 0; phase < period; ++phase) {
            double s = 0.0;
            for (std::size_t k = 0; k < cycles; ++k) s += r.seasonal[k * period + phase];
            const double mean = s / static_cast<double>(cycles);
            for (std::size_t k = 0; k < cycles; ++k) r.seasonal[k * period + phase] = mean;
        }
    }
    r.residual.resize(N);
    for (std::size_t i = 0; i < N; ++i) r.residual[i] = y[i] - r.seasonal[i] - r.trend[i];
    return r;
}

const TimeSeries& ClassDecomposition::pattern(std::size_t label) const {
    auto it = patterns.find(label);
    if (it == patterns.end()) throw ValidationError("no semantic pattern for class " + std::to_string(label));
    return it->second;
}

ClassDecomposition class_patterns(const std::map<std::size_t, std::vector<TimeSeries>>& groups,
                                  const DatasetHeader& header, const StlConfig& config) {
    config.validate();
    ClassDecomposition dec;
    dec.header = header;
    const std::size_t n = header.channels;
    const std::size_t T = header.length;
    for (const auto& [label, members] : groups) {
        if (members.size() < 2) {
            throw ValidationError("class " + std::to_string(label) + " needs at least 2 examples for decomposition");
        }
        TimeSeries pattern(n, T);
        std::vector<double> trend_level(n);
        std::vector<double> serial(members.size() * T);
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t k = 0; k < members.size(); ++k) {
                const auto& x = members[k];
                if (x.channels() != n || x.length() != T) throw ShapeError("class member does not match header");
                std::copy(x.channel(c).begin(), x.channel(c).end(), serial.begin() + static_cast<std::ptrdiff_t>(k * T));
            }
            const StlResult res = stl_decompose(serial, T, config);
            double tsum = 0.0;
            for (double v : res.trend) tsum += v;
            trend_level[c] = tsum / static_cast<double>(res.trend.size());
            auto dst = pattern.channel(c);
            for (std::size_t t = 0; t < T; ++t) {
                double s = 0.0;
                for (std::size_t k = 0; k < members.size(); ++k) s += res.seasonal[k * T + t];
                dst[t] = s / static_cast<double>(members.size()) + trend_level[c];
            }
        }
        dec.patterns.emplace(label, std::move(pattern));
        dec.trends.emplace(label, std::move(trend_level));
    }
    return dec;
}

ClassDecomposition class_patterns(const LabeledDataset& ds, const StlConfig& config) {
    return class_patterns(io::group_by_class(ds), ds.header, config);
}

Remainder remainder_of(const TimeSeries& x, std::size_t label, const ClassDecomposition& dec) {
    return {x - dec.pattern(label), label};
}

AssumptionReport assumption_check(const LabeledDataset& ds, const ClassDecomposition& dec) {
    std::map<std::size_t, ClassDistance> acc;
    AssumptionReport report;
    std::size_t total = 0;
    for (const auto& ex : ds.examples) {
        const TimeSeries& s = dec.pattern(ex.label);
        const TimeSeries diff = ex.series - s;
        double mae = 0.0;
        for (double v : diff.values()) mae += std::abs(v);
        mae /= static_cast<double>(diff.size());
        const double dtw_dist = std::sqrt(align::dtw(ex.series, s).cost);
        auto& cd = acc[ex.label];
        cd.label = ex.label;
        ++cd.count;
        cd.mean_mae += mae;
        cd.mean_dtw += dtw_dist;
        report.mean_mae += mae;
        report.mean_dtw += dtw_dist;
        ++total;
    }
    for (auto& [label, cd] : acc) {
        cd.mean_mae /= static_cast<double>(cd.count);
        cd.mean_dtw /= static_cast<double>(cd.count);
        report.per_class.push_back(cd);
    }
    if (total) {
        report.mean_mae /= static_cast<double>(total);
        report.mean_dtw /= static_cast<double>(total);
    }
    return report;
}

std::string format_patterns(const ClassDecomposition& dec) {
    std::string out = std::to_string(dec.header.channels) + ' ' + std::to_string(dec.header.length) + ' ' +
                      std::to_string(dec.header.classes) + '\n';
    for (const auto& [label, p] : dec.patterns) {
        out += "class " + std::to_string(label) + '\n';
        io::format_series(out, p);
    }
    return out;
}

ClassDecomposition parse_patterns(std::string_view text) {
    // Reuse the dataset reader: rewrite `class y` lines as bare labels.
    std::string rewritten;
    rewritten.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        const auto first = line.find_first_not_of(" \t");
        if (first != std::string_view::npos && line.substr(first).starts_with("class")) {
            line = line.substr(first + 5);
        }
        rewritten.append(line);
        rewritten.push_back('\n');
        pos = end + 1;
    }
    LabeledDataset ds;
    try {
        ds = io::parse_dataset(rewritten, Split::Test);
    } catch (const ParseError& e) {
        throw ParseError(std::string("patterns: ") + e.what());
    }
    ClassDecomposition dec;
    dec.header = ds.header;
    for (auto& ex : ds.examples) {
        if (!dec.patterns.emplace(ex.label, std::move(ex.series)).second) {
            throw ValidationError("patterns: duplicate class " + std::to_string(ex.label));
        }
    }
    return dec;
}

void save_patterns(const ClassDecomposition& dec, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write patterns '" + path.string() + "'");
    const std::string text = format_patterns(dec);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

ClassDecomposition load_patterns(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open patterns '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_patterns(buf.str());
}

}  // namespace srs::stl
