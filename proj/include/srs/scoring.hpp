#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srs/cvae.hpp"
#include "srs/dataset.hpp"
#include "srs/stl.hpp"

namespace srs::score {

/// LogRatio: l_x / l_r. LogDiff: l_x - l_r (log of the likelihood ratio).
enum class ScoreForm { LogRatio, LogDiff };
enum class CalibrationMode { MeanSigma, Quantile };

std::string_view score_form_name(ScoreForm f) noexcept;
ScoreForm parse_score_form(std::string_view s);
std::string_view mode_name(CalibrationMode m) noexcept;
CalibrationMode parse_mode(std::string_view s);

/// Below this |l_r| (nats) the log-ratio form refuses to divide.
inline constexpr double kRatioGuard = 1e-6;
/// Half-width used when the training scores have zero spread.
inline constexpr double kDegenerateWidth = 1e-9;

struct SrScore {
    double value = 0.0;
    double l_x = 0.0;
    double l_r = 0.0;
    std::size_t label = 0;
};

/// Applies the score form to a likelihood pair; throws NumericError on the
/// log-ratio division hazard.
double combine(double l_x, double l_r, ScoreForm form);

struct ScoreOptions {
    std::size_t samples = 100;
    std::uint64_t seed = 7;
    ScoreForm form = ScoreForm::LogRatio;
};

/// r = x - S_label, l_x from m_x on x, l_r from m_r on r (same seed for both).
SrScore sr_score(const TimeSeries& x, std::size_t label, const stl::ClassDecomposition& dec,
                 const cvae::LatentVariableModel& m_x, const cvae::LatentVariableModel& m_r,
                 const ScoreOptions& opts);

struct SrCalibration {
    CalibrationMode mode = CalibrationMode::MeanSigma;
    ScoreForm form = ScoreForm::LogRatio;
    double mean = 0.0;
    double sigma = 0.0;      // population standard deviation
    double median = 0.0;
    double lambda = 1.0;
    double lower = 0.0;
    double upper = 0.0;
    std::vector<double> train_scores;  // sorted; kept for quantile re-tuning

    /// Scoring settings the calibration was produced with.
    std::size_t samples = 100;
    std::uint64_t seed = 7;
    bool align_inputs = false;
    std::string model_x_hash;
    std::string model_r_hash;
};

/// Linear-interpolated quantile of ascending `sorted`, p in [0, 1].
double quantile(std::span<const double> sorted, double p);

SrCalibration calibrate(std::span<const double> train_scores, CalibrationMode mode, double lambda,
                        ScoreForm form = ScoreForm::LogRatio);

/// Recomputes [lower, upper] for a new lambda from the stored statistics.
SrCalibration with_lambda(const SrCalibration& cal, double lambda);

std::vector<double> default_lambda_grid(CalibrationMode mode);

/// With OOD validation scores: the first grid value maximizing balanced
/// accuracy. Without: the smallest grid value whose interval covers at least
/// 95% of the ID validation scores (the largest value if none does).
double tune_lambda(const SrCalibration& base, std::span<const double> val_id,
                   std::optional<std::span<const double>> val_ood, std::span<const double> grid);

/// Balanced accuracy (mean of ID and OOD recall) of the interval rule.
double balanced_accuracy(const SrCalibration& cal, std::span<const double> id, std::span<const double> ood);

/// Larger means further outside the ID region; <= 1 inside the interval in
/// quantile mode, <= lambda in mean_sigma mode.
double ood_magnitude(double value, const SrCalibration& cal);

bool is_in_distribution(double value, const SrCalibration& cal) noexcept;

struct Decision {
    bool ood = false;
    SrScore score;
    double magnitude = 0.0;
};

Decision detect(const SrScore& score, const SrCalibration& cal);

/// Fallback classifier: the class whose pattern has the lowest DTW cost.
std::size_t nearest_pattern(const TimeSeries& x, const stl::ClassDecomposition& dec);

std::string format_calibration(const SrCalibration& cal);
SrCalibration parse_calibration(std::string_view text);
void save_calibration(const SrCalibration& cal, const std::filesystem::path& path);
SrCalibration load_calibration(const std::filesystem::path& path);

/// FNV-1a 64-bit digest as 16 hex digits (model identity in calibration files).
std::string digest_hex(std::string_view bytes);

}  // namespace srs::score
