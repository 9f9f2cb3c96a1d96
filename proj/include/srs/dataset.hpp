#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace srs {

/// An n-channel, T-step real signal stored channel-major (channel c occupies
/// values[c*T, (c+1)*T)).
class TimeSeries {
public:
    TimeSeries() = default;

    /// Zero-filled series. Requires n >= 1 and T >= 1.
    TimeSeries(std::size_t channels, std::size_t length);

    /// Validates shape and finiteness; throws ValidationError.
    TimeSeries(std::size_t channels, std::size_t length, std::vector<double> values);

    static TimeSeries from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t channels() const noexcept { return channels_; }
    std::size_t length() const noexcept { return length_; }
    std::size_t size() const noexcept { return values_.size(); }

    double operator()(std::size_t c, std::size_t t) const noexcept { return values_[c * length_ + t]; }
    double& operator()(std::size_t c, std::size_t t) noexcept { return values_[c * length_ + t]; }

    std::span<const double> channel(std::size_t c) const noexcept { return {values_.data() + c * length_, length_}; }
    std::span<double> channel(std::size_t c) noexcept { return {values_.data() + c * length_, length_}; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    bool all_finite() const noexcept;

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
    std::size_t channels_ = 0;
    std::size_t length_ = 0;
    std::vector<double> values_;
};

TimeSeries operator-(const TimeSeries& a, const TimeSeries& b);
TimeSeries operator+(const TimeSeries& a, const TimeSeries& b);

enum class Split { Train, Validation, Test };

Split parse_split(std::string_view s);
std::string_view split_name(Split s) noexcept;

struct DatasetHeader {
    std::size_t channels = 0;
    std::size_t length = 0;
    std::size_t classes = 0;

    friend bool operator==(const DatasetHeader&, const DatasetHeader&) = default;
};

struct LabeledExample {
    TimeSeries series;
    std::size_t label = 0;
};

struct LabeledDataset {
    DatasetHeader header;
    std::vector<LabeledExample> examples;
    Split split = Split::Train;

    std::size_t size() const noexcept { return examples.size(); }
    bool empty() const noexcept { return examples.empty(); }

    /// Throws ValidationError on any broken invariant. Train splits must
    /// contain every class at least once.
    void validate() const;
};

/// Per-channel min/max over the training split.
struct NormStats {
    std::vector<double> min;
    std::vector<double> max;

    std::size_t channels() const noexcept { return min.size(); }
    bool is_constant(std::size_t c) const noexcept { return max[c] == min[c]; }

    friend bool operator==(const NormStats&, const NormStats&) = default;
};

namespace io {

/// Text format: header line `n T C`, then per example a label line followed
/// by n lines of T numbers. Blank lines are ignored.
LabeledDataset load_dataset(const std::filesystem::path& path, Split split);
LabeledDataset parse_dataset(std::string_view text, Split split);

/// Writes with 17 significant digits so that every double round-trips.
void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path);
std::string format_dataset(const LabeledDataset& ds);

/// Appends `x` to `out` as n lines of T space-separated numbers.
void format_series(std::string& out, const TimeSeries& x);

NormStats fit_norm_stats(const LabeledDataset& ds);
NormStats fit_norm_stats(std::span<const TimeSeries> series);

TimeSeries normalize(const TimeSeries& x, const NormStats& stats);
TimeSeries denormalize(const TimeSeries& x, const NormStats& stats);

/// Leading-window clip / trailing zero pad on both axes.
TimeSeries reconcile_dims(const TimeSeries& x, std::size_t channels, std::size_t length);

/// Reconciles every example to `target` (labels kept, header channels/length replaced).
LabeledDataset reconcile_dataset(const LabeledDataset& ds, std::size_t channels, std::size_t length);

std::map<std::size_t, std::vector<TimeSeries>> group_by_class(const LabeledDataset& ds);

}  // namespace io
}  // namespace srs
