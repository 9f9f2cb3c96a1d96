#include "srs/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "srs/errors.hpp"

namespace srs {

TimeSeries::TimeSeries(std::size_t channels, std::size_t length)
    : channels_(channels), length_(length), values_(channels * length, 0.0) {
    if (channels == 0 || length == 0) throw ShapeError("time series needs at least one channel and one step");
}

TimeSeries::TimeSeries(std::size_t channels, std::size_t length, std::vector<double> values)
    : channels_(channels), length_(length), values_(std::move(values)) {
    if (channels == 0 || length == 0) throw ShapeError("time series needs at least one channel and one step");
    if (values_.size() != channels * length) {
        throw ShapeError("time series value count " + std::to_string(values_.size()) + " does not match " +
                         std::to_string(channels) + "x" + std::to_string(length));
    }
    if (!all_finite()) throw ValidationError("time series contains a non-finite value");
}

TimeSeries TimeSeries::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw ShapeError("time series needs at least one channel");
    const std::size_t len = rows.front().size();
    std::vector<double> v;
    v.reserve(rows.size() * len);
    for (const auto& r : rows) {
        if (r.size() != len) throw ShapeError("ragged channel lengths");
        v.insert(v.end(), r.begin(), r.end());
    }
    return TimeSeries(rows.size(), len, std::move(v));
}

bool TimeSeries::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

void require_same_shape(const TimeSeries& a, const TimeSeries& b) {
    if (a.channels() != b.channels() || a.length() != b.length()) {
        throw ShapeError("shape mismatch: " + std::to_string(a.channels()) + "x" + std::to_string(a.length()) +
                         " vs " + std::to_string(b.channels()) + "x" + std::to_string(b.length()));
    }
}

}  // namespace

TimeSeries operator-(const TimeSeries& a, const TimeSeries& b) {
    require_same_shape(a, b);
    TimeSeries out(a.channels(), a.length());
    auto o = out.values();
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] - bv[i];
    return out;
}

TimeSeries operator+(const TimeSeries& a, const TimeSeries& b) {
    require_same_shape(a, b);
    TimeSeries out(a.channels(), a.length());
    auto o = out.values();
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] + bv[i];
    return out;
}

Split parse_split(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "val" || s == "validation") return Split::Validation;
    if (s == "test") return Split::Test;
    throw ConfigError("unknown split '" + std::string(s) + "' (expected train|val|test)");
}

std::string_view split_name(Split s) noexcept {
    switch (s) {
        case Split::Train: return "train";
        case Split::Validation: return "val";
        case Split::Test: return "test";
    }
    return "train";
}

void LabeledDataset::validate() const {
    if (header.channels < 1) throw ValidationError("dataset header requires n >= 1");
    if (header.length < 2) throw ValidationError("dataset header requires T >= 2");
    if (header.classes < 1) throw ValidationError("dataset header requires C >= 1");
    std::vector<bool> seen(header.classes, false);
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        if (ex.series.channels() != header.channels || ex.series.length() != header.length) {
            throw ValidationError("example " + std::to_string(i) + " does not match header shape");
        }
        if (ex.label >= header.classes) {
            throw ValidationError("example " + std::to_string(i) + " has label " + std::to_string(ex.label) +
                                  " >= C=" + std::to_string(header.classes));
        }
        if (!ex.series.all_finite()) throw ValidationError("example " + std::to_string(i) + " is not finite");
        seen[ex.label] = true;
    }
    if (split == Split::Train && !examples.empty()) {
        for (std::size_t c = 0; c < header.classes; ++c) {
            if (!seen[c]) throw ValidationError("class " + std::to_string(c) + " missing from train split");
        }
    }
}

namespace io {
namespace {

struct LineReader {
    std::string_view text;
    std::size_t pos = 0;
    std::size_t line_no = 0;

    // Next non-blank line, or false at end of input.
    bool next(std::string_view& line) {
        while (pos < text.size()) {
            std::size_t end = text.find('\n', pos);
            if (end == std::string_view::npos) end = text.size();
            std::string_view l = text.substr(pos, end - pos);
            pos = end + 1;
            ++line_no;
            if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
            if (l.find_first_not_of(" \t") != std::string_view::npos) {
                line = l;
                return true;
            }
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("line " + std::to_string(line_no) + ": " + what);
    }
};

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == ',')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != ',') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
    const char* first = tok.data();
    if (!tok.empty() && tok.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), out);
    return ec == std::errc() && ptr == tok.data() + tok.size();
}

void append_double(std::string& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

}  // namespace

LabeledDataset parse_dataset(std::string_view text, Split split) {
    LineReader reader{text};
    std::string_view line;
    if (!reader.next(line)) throw ParseError("empty dataset file (missing header)");
    auto head = split_ws(line);
    LabeledDataset ds;
    ds.split = split;
    if (head.size() != 3 || !parse_number(head[0], ds.header.channels) || !parse_number(head[1], ds.header.length) ||
        !parse_number(head[2], ds.header.classes)) {
        reader.fail("header must be `n T C`");
    }
    const std::size_t n = ds.header.channels;
    const std::size_t T = ds.header.length;
    if (n < 1 || T < 2 || ds.header.classes < 1) reader.fail("header requires n >= 1, T >= 2, C >= 1");

    while (reader.next(line)) {
        auto label_tok = split_ws(line);
        std::size_t label = 0;
        if (label_tok.size() != 1 || !parse_number(label_tok[0], label)) reader.fail("expected a class label line");
        std::vector<double> values;
        values.reserve(n * T);
        for (std::size_t c = 0; c < n; ++c) {
            if (!reader.next(line)) reader.fail("unexpected end of file inside an example");
            auto toks = split_ws(line);
            if (toks.size() != T) {
                throw ValidationError("line " + std::to_string(reader.line_no) + ": expected " + std::to_string(T) +
                                      " values, got " + std::to_string(toks.size()));
            }
            for (auto tok : toks) {
                double v = 0.0;
                if (!parse_number(tok, v)) reader.fail("bad number '" + std::string(tok) + "'");
                if (!std::isfinite(v)) {
                    throw ValidationError("line " + std::to_string(reader.line_no) + ": non-finite value");
                }
                values.push_back(v);
            }
        }
        ds.examples.push_back({TimeSeries(n, T, std::move(values)), label});
    }
    ds.validate();
    return ds;
}

LabeledDataset load_dataset(const std::filesystem::path& path, Split split) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_dataset(buf.str(), split);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void format_series(std::string& out, const TimeSeries& x) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
        auto ch = x.channel(c);
        for (std::size_t t = 0; t < ch.size(); ++t) {
            if (t) out.push_back(' ');
            append_double(out, ch[t]);
        }
        out.push_back('\n');
    }
}

std::string format_dataset(const LabeledDataset& ds) {
    std::string out;
    out += std::to_string(ds.header.channels) + ' ' + std::to_string(ds.header.length) + ' ' +
           std::to_string(ds.header.classes) + '\n';
    for (const auto& ex : ds.examples) {
        out += std::to_string(ex.label);
        out.push_back('\n');
        format_series(out, ex.series);
    }
    return out;
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path) {
    ds.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write dataset '" + path.string() + "'");
    const std::string text = format_dataset(ds);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

NormStats fit_norm_stats(std::span<const TimeSeries> series) {
    if (series.empty()) throw ValidationError("cannot fit normalization statistics on an empty dataset");
    const std::size_t n = series.front().channels();
    NormStats s;
    s.min.assign(n, std::numeric_limits<double>::infinity());
    s.max.assign(n, -std::numeric_limits<double>::infinity());
    for (const auto& x : series) {
        if (x.channels() != n) throw ShapeError("channel count differs across examples");
        for (std::size_t c = 0; c < n; ++c) {
            auto [lo, hi] = std::minmax_element(x.channel(c).begin(), x.channel(c).end());
            s.min[c] = std::min(s.min[c], *lo);
            s.max[c] = std::max(s.max[c], *hi);
        }
    }
    return s;
}

NormStats fit_norm_stats(const LabeledDataset& ds) {
    std::vector<TimeSeries> xs;
    xs.reserve(ds.size());
    for (const auto& ex : ds.examples) xs.push_back(ex.series);
    return fit_norm_stats(xs);
}

TimeSeries normalize(const TimeSeries& x, const NormStats& stats) {
    if (x.channels() != stats.channels()) throw ShapeError("normalize: channel count does not match statistics");
    TimeSeries out(x.channels(), x.length());
    for (std::size_t c = 0; c < x.channels(); ++c) {
        auto src = x.channel(c);
        auto dst = out.channel(c);
        if (stats.is_constant(c)) continue;
        const double lo = stats.min[c];
        const double range = stats.max[c] - lo;
        for (std::size_t t = 0; t < src.size(); ++t) dst[t] = (src[t] - lo) / range;
    }
    return out;
}

TimeSeries denormalize(const TimeSeries& x, const NormStats& stats) {
    if (x.channels() != stats.channels()) throw ShapeError("denormalize: channel count does not match statistics");
    TimeSeries out(x.channels(), x.length());
    for (std::size_t c = 0; c < x.channels(); ++c) {
        auto src = x.channel(c);
        auto dst = out.channel(c);
        const double lo = stats.min[c];
        const double range = stats.max[c] - lo;
        for (std::size_t t = 0; t < src.size(); ++t) dst[t] = lo + src[t] * range;
    }
    return out;
}

TimeSeries reconcile_dims(const TimeSeries& x, std::size_t channels, std::size_t length) {
    TimeSeries out(channels, length);
    const std::size_t nc = std::min(channels, x.channels());
    const std::size_t nt = std::min(length, x.length());
    for (std::size_t c = 0; c < nc; ++c) {
        auto src = x.channel(c);
        std::copy_n(src.begin(), nt, out.channel(c).begin());
    }
    return out;
}

LabeledDataset reconcile_dataset(const LabeledDataset& ds, std::size_t channels, std::size_t length) {
    LabeledDataset out;
    out.header = {channels, length, ds.header.classes};
    out.split = ds.split;
    out.examples.reserve(ds.size());
    for (const auto& ex : ds.examples) out.examples.push_back({reconcile_dims(ex.series, channels, length), ex.label});
    return out;
}

std::map<std::size_t, std::vector<TimeSeries>> group_by_class(const LabeledDataset& ds) {
    std::map<std::size_t, std::vector<TimeSeries>> groups;
    for (const auto& ex : ds.examples) groups[ex.label].push_back(ex.series);
    return groups;
}

}  // namespace io
}  // namespace srs
