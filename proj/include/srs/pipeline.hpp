#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "srs/align.hpp"
#include "srs/cvae.hpp"
#include "srs/dataset.hpp"
#include "srs/scoring.hpp"
#include "srs/stl.hpp"

namespace srs::pipeline {

/// Every stage setting of the detector in one place.
struct PipelineConfig {
    std::uint64_t seed = 7;
    stl::StlConfig stl;
    bool align = false;
    std::size_t align_passes = 1;
    /// Shape fields (channels/length/classes) are filled from the data.
    cvae::Architecture cvae;
    cvae::TrainConfig train;
    std::size_t samples = 100;
    score::ScoreForm score_form = score::ScoreForm::LogRatio;
    score::CalibrationMode mode = score::CalibrationMode::MeanSigma;
    /// Fixed lambda; when empty lambda is tuned on validation data.
    std::optional<double> lambda;
    std::vector<double> lambda_grid;

    void validate() const;
    std::vector<double> grid() const;
};

nlohmann::ordered_json to_json(const PipelineConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& j);

/// Per-example Monte-Carlo seed derived from the run seed.
std::uint64_t example_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept;

struct FittedPipeline {
    stl::ClassDecomposition patterns;
    cvae::CvaeModel model_x;
    cvae::CvaeModel model_r;
    score::SrCalibration calibration;
    stl::AssumptionReport assumption;
    std::vector<align::PassStats> alignment;
    std::string lambda_policy;
};

/// Decomposes the training split (aligning it first when configured).
struct Decomposed {
    LabeledDataset data;
    stl::ClassDecomposition patterns;
    std::vector<align::PassStats> alignment;
};
Decomposed decompose(const LabeledDataset& train, const PipelineConfig& cfg);

/// Remainders of every example against its class pattern.
LabeledDataset remainders(const LabeledDataset& ds, const stl::ClassDecomposition& dec);

cvae::CvaeModel train_model(const LabeledDataset& data, const PipelineConfig& cfg, std::string_view target);

/// Input aligned against `label`'s pattern when `align_inputs` is set.
TimeSeries prepare_input(const TimeSeries& x, std::size_t label, const stl::ClassDecomposition& dec, bool align_inputs);

/// Scores every series (in parallel); stream separates seed sequences of
/// different sets scored in one run.
std::vector<score::SrScore> score_all(const std::vector<TimeSeries>& xs, const std::vector<std::size_t>& labels,
                                      const stl::ClassDecomposition& dec, const cvae::CvaeModel& m_x,
                                      const cvae::CvaeModel& m_r, const PipelineConfig& cfg, bool align_inputs,
                                      std::uint64_t stream);

std::vector<double> values_of(const std::vector<score::SrScore>& scores);

struct CalibrationStage {
    score::SrCalibration calibration;
    std::string lambda_policy;
};

/// Scores `fit_data` (already aligned when alignment is on), calibrates, and
/// picks lambda: fixed, tuned on validation data, or the mode default.
CalibrationStage calibrate_stage(const LabeledDataset& fit_data, const stl::ClassDecomposition& dec,
                                 const cvae::CvaeModel& m_x, const cvae::CvaeModel& m_r, const LabeledDataset* val,
                                 const LabeledDataset* val_ood, const PipelineConfig& cfg);

/// Full training stage: decompose, [align], train both models, score the
/// training set, calibrate, and choose lambda from validation data.
FittedPipeline fit(const LabeledDataset& train, const LabeledDataset* val, const LabeledDataset* val_ood,
                   const PipelineConfig& cfg);

/// Labels of OOD inputs from the nearest-pattern classifier.
std::vector<std::size_t> predicted_labels(const std::vector<TimeSeries>& xs, const stl::ClassDecomposition& dec);

}  // namespace srs::pipeline
