#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "srs/dataset.hpp"
#include "srs/metrics.hpp"
#include "srs/pipeline.hpp"

namespace srs::eval {

enum class Setting { InDomain, CrossDomain };

struct OodSource {
    std::string name;
    LabeledDataset data;
};

/// In-memory experiment inputs. OOD sources are reconciled to the ID header.
struct ExperimentData {
    LabeledDataset train;
    LabeledDataset val;
    LabeledDataset test;
    std::vector<OodSource> ood;
    /// Optional OOD validation set for lambda tuning.
    LabeledDataset val_ood;
};

struct ExperimentSpec {
    std::filesystem::path train;
    std::filesystem::path val;
    std::filesystem::path test;
    struct Source {
        std::string name;
        std::filesystem::path path;
    };
    std::vector<Source> ood;
    std::filesystem::path val_ood;
    Setting setting = Setting::InDomain;
    pipeline::PipelineConfig pipeline;
};

/// Reads an experiment JSON file; relative paths resolve against its directory.
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const ExperimentSpec& spec, const std::filesystem::path& relative_to);

ExperimentData load_experiment_data(const ExperimentSpec& spec);

struct SourceResult {
    std::string name;
    bool ok = false;
    std::string error;
    std::size_t n_id = 0;
    std::size_t n_ood = 0;
    F1Point sr_f1;
    double sr_auroc = 0.0;
    F1Point ll_f1;
    double ll_auroc = 0.0;
    std::size_t id_flagged = 0;
    std::size_t ood_flagged = 0;
    /// Per-example rows for score histograms.
    std::vector<score::SrScore> id_scores;
    std::vector<score::SrScore> ood_scores;
    std::vector<double> id_magnitude;
    std::vector<double> ood_magnitude;
};

struct ExperimentResult {
    nlohmann::ordered_json report;
    std::vector<SourceResult> sources;
};

ExperimentResult run_experiment(const ExperimentData& data, const pipeline::PipelineConfig& cfg,
                                Setting setting = Setting::InDomain);
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// One CSV row per scored example: source,group,index,label_used,l_x,l_r,score,magnitude.
std::string histogram_csv(const ExperimentResult& result);

std::string setting_name(Setting s);
Setting parse_setting(std::string_view s);

}  // namespace srs::eval
