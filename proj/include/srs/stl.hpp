#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "srs/dataset.hpp"

namespace srs::stl {

struct StlConfig {
    /// Cycle-subseries smoother width as a fraction of the number of periods.
    double seasonal_span = 0.75;
    int seasonal_degree = 1;
    int trend_degree = 1;
    int lowpass_degree = 1;
    /// Trend / low-pass widths in points; 0 selects the standard rule.
    std::size_t trend_window = 0;
    std::size_t lowpass_window = 0;
    int inner_iters = 2;
    int robust_iters = 2;
    /// Replace the seasonal component by its per-phase mean over periods.
    bool periodic_seasonal = true;

    void validate() const;
};

struct StlResult {
    std::vector<double> seasonal;
    std::vector<double> trend;
    std::vector<double> residual;
};

/// Classic two-loop STL with period `period`. Requires a whole number of at
/// least two periods. seasonal + trend + residual reproduces the input.
StlResult stl_decompose(std::span<const double> serialized, std::size_t period, const StlConfig& config = {});

/// Smoother widths that stl_decompose uses for a series of `periods` cycles.
struct StlWindows {
    std::size_t seasonal;
    std::size_t trend;
    std::size_t lowpass;
};
StlWindows resolve_windows(std::size_t period, std::size_t periods, const StlConfig& config);

/// Per-class semantic patterns with the mean trend level folded in.
struct ClassDecomposition {
    DatasetHeader header;
    std::map<std::size_t, TimeSeries> patterns;
    /// Per-class, per-channel mean trend level (already included in patterns).
    std::map<std::size_t, std::vector<double>> trends;

    const TimeSeries& pattern(std::size_t label) const;
    bool has_class(std::size_t label) const noexcept { return patterns.contains(label); }
};

struct Remainder {
    TimeSeries values;
    std::size_t label = 0;
};

ClassDecomposition class_patterns(const std::map<std::size_t, std::vector<TimeSeries>>& groups,
                                  const DatasetHeader& header, const StlConfig& config = {});

/// Convenience: group the dataset and decompose.
ClassDecomposition class_patterns(const LabeledDataset& ds, const StlConfig& config = {});

Remainder remainder_of(const TimeSeries& x, std::size_t label, const ClassDecomposition& dec);

struct ClassDistance {
    std::size_t label = 0;
    std::size_t count = 0;
    double mean_mae = 0.0;
    double mean_dtw = 0.0;
};

struct AssumptionReport {
    std::vector<ClassDistance> per_class;
    double mean_mae = 0.0;
    double mean_dtw = 0.0;
};

/// Mean absolute error and DTW distance (square root of the squared-Euclidean
/// path cost) between each example and its class pattern.
AssumptionReport assumption_check(const LabeledDataset& ds, const ClassDecomposition& dec);

std::string format_patterns(const ClassDecomposition& dec);
ClassDecomposition parse_patterns(std::string_view text);
void save_patterns(const ClassDecomposition& dec, const std::filesystem::path& path);
ClassDecomposition load_patterns(const std::filesystem::path& path);

}  // namespace srs::stl
