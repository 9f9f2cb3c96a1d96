#include "srs/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "srs/dtw.hpp"
#include "srs/errors.hpp"

namespace srs::score {

std::string_view score_form_name(ScoreForm f) noexcept {
    return f == ScoreForm::LogRatio ? "log_ratio" : "log_diff";
}

ScoreForm parse_score_form(std::string_view s) {
    if (s == "log_ratio") return ScoreForm::LogRatio;
    if (s == "log_diff") return ScoreForm::LogDiff;
    throw ConfigError("unknown score form '" + std::string(s) + "' (expected log_ratio|log_diff)");
}

std::string_view mode_name(CalibrationMode m) noexcept {
    return m == CalibrationMode::MeanSigma ? "mean_sigma" : "quantile";
}

CalibrationMode parse_mode(std::string_view s) {
    if (s == "mean_sigma") return CalibrationMode::MeanSigma;
    if (s == "quantile") return CalibrationMode::Quantile;
    throw ConfigError("unknown calibration mode '" + std::string(s) + "' (expected mean_sigma|quantile)");
}

double combine(double l_x, double l_r, ScoreForm form) {
    if (form == ScoreForm::LogDiff) return l_x - l_r;
    if (std::abs(l_r) < kRatioGuard) {
        throw NumericError("remainder log-likelihood is ~0; the log_ratio score is undefined here, use log_diff");
    }
    return l_x / l_r;
}

SrScore sr_score(const TimeSeries& x, std::size_t label, const stl::ClassDecomposition& dec,
                 const cvae::LatentVariableModel& m_x, const cvae::LatentVariableModel& m_r,
                 const ScoreOptions& opts) {
    const auto r = stl::remainder_of(x, label, dec);
    SrScore s;
    s.label = label;
    s.l_x = cvae::mc_log_likelihood(m_x, x, label, opts.samples, opts.seed);
    s.l_r = cvae::mc_log_likelihood(m_r, r.values, label, opts.samples, opts.seed);
    s.value = combine(s.l_x, s.l_r, opts.form);
    return s;
}

double quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw ValidationError("quantile of an empty sample");
    p = std::clamp(p, 0.0, 1.0);
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace {

void set_interval(SrCalibration& cal) {
    if (cal.mode == CalibrationMode::MeanSigma) {
        if (cal.lambda < 0.0) throw ConfigError("lambda must be >= 0 in mean_sigma mode");
        if (cal.sigma == 0.0) {
            cal.lower = cal.mean - kDegenerateWidth;
            cal.upper = cal.mean + kDegenerateWidth;
        } else {
            cal.lower = cal.mean - cal.lambda * cal.sigma;
            cal.upper = cal.mean + cal.lambda * cal.sigma;
        }
    } else {
        if (!(cal.lambda > 0.0 && cal.lambda <= 0.5)) throw ConfigError("quantile mode requires 0 < lambda <= 0.5");
        cal.lower = quantile(cal.train_scores, 0.5 - cal.lambda);
        cal.upper = quantile(cal.train_scores, 0.5 + cal.lambda);
    }
}

}  // namespace

SrCalibration calibrate(std::span<const double> train_scores, CalibrationMode mode, double lambda, ScoreForm form) {
    if (train_scores.size() < 2) throw ValidationError("calibration needs at least 2 training scores");
    SrCalibration cal;
    cal.mode = mode;
    cal.form = form;
    cal.lambda = lambda;
    cal.train_scores.assign(train_scores.begin(), train_scores.end());
    for (double v : cal.train_scores) {
        if (!std::isfinite(v)) throw NumericError("calibration: non-finite training score");
    }
    std::sort(cal.train_scores.begin(), cal.train_scores.end());
    double sum = 0.0;
    for (double v : train_scores) sum += v;
    cal.mean = sum / static_cast<double>(train_scores.size());
    double ss = 0.0;
    for (double v : train_scores) ss += (v - cal.mean) * (v - cal.mean);
    cal.sigma = std::sqrt(ss / static_cast<double>(train_scores.size()));
    cal.median = quantile(cal.train_scores, 0.5);
    set_interval(cal);
    return cal;
}

SrCalibration with_lambda(const SrCalibration& cal, double lambda) {
    SrCalibration out = cal;
    out.lambda = lambda;
    set_interval(out);
    return out;
}

std::vector<double> default_lambda_grid(CalibrationMode mode) {
    std::vector<double> grid;
    if (mode == CalibrationMode::MeanSigma) {
        for (int i = 1; i <= 12; ++i) grid.push_back(0.25 * i);
    } else {
        for (int i = 1; i <= 10; ++i) grid.push_back(0.05 * i);
    }
    return grid;
}

bool is_in_distribution(double value, const SrCalibration& cal) noexcept {
    return value >= cal.lower && value <= cal.upper;
}

double balanced_accuracy(const SrCalibration& cal, std::span<const double> id, std::span<const double> ood) {
    std::size_t id_ok = 0;
    for (double v : id) id_ok += is_in_distribution(v, cal) ? 1 : 0;
    std::size_t ood_ok = 0;
    for (double v : ood) ood_ok += is_in_distribution(v, cal) ? 0 : 1;
    const double id_rate = id.empty() ? 0.0 : static_cast<double>(id_ok) / static_cast<double>(id.size());
    const double ood_rate = ood.empty() ? 0.0 : static_cast<double>(ood_ok) / static_cast<double>(ood.size());
    return 0.5 * (id_rate + ood_rate);
}

double tune_lambda(const SrCalibration& base, std::span<const double> val_id,
                   std::optional<std::span<const double>> val_ood, std::span<const double> grid) {
    if (grid.empty()) throw ConfigError("lambda grid is empty");
    if (val_id.empty()) throw ValidationError("lambda tuning needs ID validation scores");
    if (val_ood && !val_ood->empty()) {
        double best_lambda = grid.front();
        double best = -1.0;
        for (double lambda : grid) {
            const double acc = balanced_accuracy(with_lambda(base, lambda), val_id, *val_ood);
            if (acc > best) {
                best = acc;
                best_lambda = lambda;
            }
        }
        return best_lambda;
    }
    std::vector<double> sorted(grid.begin(), grid.end());
    std::sort(sorted.begin(), sorted.end());
    for (double lambda : sorted) {
        const auto cal = with_lambda(base, lambda);
        std::size_t covered = 0;
        for (double v : val_id) covered += is_in_distribution(v, cal) ? 1 : 0;
        if (static_cast<double>(covered) >= 0.95 * static_cast<double>(val_id.size())) return lambda;
    }
    return sorted.back();
}

double ood_magnitude(double value, const SrCalibration& cal) {
    if (cal.mode == CalibrationMode::MeanSigma) {
        return std::abs(value - cal.mean) / std::max(cal.sigma, kDegenerateWidth);
    }
    if (value >= cal.median) return (value - cal.median) / std::max(cal.upper - cal.median, kDegenerateWidth);
    return (cal.median - value) / std::max(cal.median - cal.lower, kDegenerateWidth);
}

Decision detect(const SrScore& score, const SrCalibration& cal) {
    return {!is_in_distribution(score.value, cal), score, ood_magnitude(score.value, cal)};
}

std::size_t nearest_pattern(const TimeSeries& x, const stl::ClassDecomposition& dec) {
    if (dec.patterns.empty()) throw ValidationError("no class patterns available");
    std::size_t best_label = dec.patterns.begin()->first;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [label, p] : dec.patterns) {
        const double c = align::dtw_cost(x, p);
        if (c < best) {
            best = c;
            best_label = label;
        }
    }
    return best_label;
}

}  // namespace srs::score
