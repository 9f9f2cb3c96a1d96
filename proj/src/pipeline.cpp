#include "srs/pipeline.hpp"

#include "srs/errors.hpp"
#include "srs/parallel.hpp"

namespace srs::pipeline {

using nlohmann::json;
using nlohmann::ordered_json;

void PipelineConfig::validate() const {
    stl.validate();
    train.validate();
    if (samples < 1) throw ConfigError("pipeline: samples must be >= 1");
    if (align && align_passes < 1) throw ConfigError("pipeline: alignment needs at least one pass");
    if (lambda) {
        if (mode == score::CalibrationMode::Quantile && !(*lambda > 0.0 && *lambda <= 0.5)) {
            throw ConfigError("pipeline: quantile mode requires 0 < lambda <= 0.5");
        }
        if (mode == score::CalibrationMode::MeanSigma && *lambda < 0.0) {
            throw ConfigError("pipeline: lambda must be >= 0");
        }
    }
    for (double l : lambda_grid) {
        if (mode == score::CalibrationMode::Quantile && !(l > 0.0 && l <= 0.5)) {
            throw ConfigError("pipeline: quantile lambda grid values must lie in (0, 0.5]");
        }
    }
}

std::vector<double> PipelineConfig::grid() const {
    return lambda_grid.empty() ? score::default_lambda_grid(mode) : lambda_grid;
}

ordered_json to_json(const PipelineConfig& c) {
    ordered_json j;
    j["seed"] = c.seed;
    j["stl"] = {{"seasonal_span", c.stl.seasonal_span}, {"seasonal_degree", c.stl.seasonal_degree},
                {"trend_degree", c.stl.trend_degree},   {"lowpass_degree", c.stl.lowpass_degree},
                {"trend_window", c.stl.trend_window},   {"lowpass_window", c.stl.lowpass_window},
                {"inner_iters", c.stl.inner_iters},     {"robust_iters", c.stl.robust_iters},
                {"periodic_seasonal", c.stl.periodic_seasonal}};
    j["align"] = c.align;
    j["align_passes"] = c.align_passes;
    j["cvae"] = {{"conv_channels", c.cvae.conv_channels},
                 {"latent_dim", c.cvae.latent_dim},
                 {"decoder_sigma", c.cvae.decoder_sigma}};
    j["train"] = {{"learning_rate", c.train.learning_rate}, {"iterations", c.train.iterations},
                  {"batch_size", c.train.batch_size},       {"beta1", c.train.beta1},
                  {"beta2", c.train.beta2},                 {"epsilon", c.train.epsilon}};
    j["samples"] = c.samples;
    j["score_form"] = score::score_form_name(c.score_form);
    j["mode"] = score::mode_name(c.mode);
    j["lambda"] = c.lambda ? ordered_json(*c.lambda) : ordered_json(nullptr);
    j["lambda_grid"] = c.grid();
    return j;
}

namespace {

void reject_unknown(const json& j, std::initializer_list<std::string_view> keys, std::string_view where) {
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (auto key : keys) ok = ok || key == k;
        if (!ok) throw ConfigError("unknown key '" + k + "' in " + std::string(where));
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
    PipelineConfig c;
    try {
        reject_unknown(j,
                       {"seed", "stl", "align", "align_passes", "cvae", "train", "samples", "score_form", "mode",
                        "lambda", "lambda_grid"},
                       "pipeline config");
        read(j, "seed", c.seed);
        if (j.contains("stl")) {
            const auto& s = j.at("stl");
            reject_unknown(s,
                           {"seasonal_span", "seasonal_degree", "trend_degree", "lowpass_degree", "trend_window",
                            "lowpass_window", "inner_iters", "robust_iters", "periodic_seasonal"},
                           "stl config");
            read(s, "seasonal_span", c.stl.seasonal_span);
            read(s, "seasonal_degree", c.stl.seasonal_degree);
            read(s, "trend_degree", c.stl.trend_degree);
            read(s, "lowpass_degree", c.stl.lowpass_degree);
            read(s, "trend_window", c.stl.trend_window);
            read(s, "lowpass_window", c.stl.lowpass_window);
            read(s, "inner_iters", c.stl.inner_iters);
            read(s, "robust_iters", c.stl.robust_iters);
            read(s, "periodic_seasonal", c.stl.periodic_seasonal);
        }
        read(j, "align", c.align);
        read(j, "align_passes", c.align_passes);
        if (j.contains("cvae")) {
            const auto& a = j.at("cvae");
            reject_unknown(a, {"conv_channels", "latent_dim", "decoder_sigma"}, "cvae config");
            read(a, "conv_channels", c.cvae.conv_channels);
            read(a, "latent_dim", c.cvae.latent_dim);
            read(a, "decoder_sigma", c.cvae.decoder_sigma);
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            reject_unknown(t, {"learning_rate", "iterations", "batch_size", "beta1", "beta2", "epsilon"},
                           "train config");
            read(t, "learning_rate", c.train.learning_rate);
            read(t, "iterations", c.train.iterations);
            read(t, "batch_size", c.train.batch_size);
            read(t, "beta1", c.train.beta1);
            read(t, "beta2", c.train.beta2);
            read(t, "epsilon", c.train.epsilon);
        }
        read(j, "samples", c.samples);
        if (j.contains("score_form")) c.score_form = score::parse_score_form(j.at("score_form").get<std::string>());
        if (j.contains("mode")) c.mode = score::parse_mode(j.at("mode").get<std::string>());
        if (j.contains("lambda") && !j.at("lambda").is_null()) c.lambda = j.at("lambda").get<double>();
        read(j, "lambda_grid", c.lambda_grid);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("pipeline config: ") + e.what());
    }
    c.validate();
    return c;
}

std::uint64_t example_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
    // splitmix64 finalizer over the combined key
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream * 0x100000001ULL + index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Decomposed decompose(const LabeledDataset& train, const PipelineConfig& cfg) {
    Decomposed d{train, stl::class_patterns(train, cfg.stl), {}};
    if (cfg.align) {
        auto aligned = align::align_dataset(train, d.patterns, cfg.align_passes, cfg.stl);
        d.data = std::move(aligned.data);
        d.patterns = std::move(aligned.patterns);
        d.alignment = std::move(aligned.passes);
    }
    return d;
}

LabeledDataset remainders(const LabeledDataset& ds, const stl::ClassDecomposition& dec) {
    LabeledDataset out;
    out.header = ds.header;
    out.split = ds.split;
    out.examples.reserve(ds.size());
    for (const auto& ex : ds.examples) out.examples.push_back({stl::remainder_of(ex.series, ex.label, dec).values, ex.label});
    return out;
}

cvae::CvaeModel train_model(const LabeledDataset& data, const PipelineConfig& cfg, std::string_view target) {
    cvae::Architecture arch = cfg.cvae;
    arch.channels = data.header.channels;
    arch.length = data.header.length;
    arch.classes = data.header.classes;
    cvae::TrainConfig tc = cfg.train;
    tc.seed = cfg.seed + (target == "r" ? 1 : 0);
    const auto samples = cvae::samples_from(data);
    cvae::CvaeModel m = cvae::train(samples, arch, tc);
    m.target = std::string(target);
    return m;
}

TimeSeries prepare_input(const TimeSeries& x, std::size_t label, const stl::ClassDecomposition& dec, bool align_inputs) {
    if (!align_inputs) return x;
    return align::align_to_pattern(x, dec.pattern(label)).series;
}

std::vector<score::SrScore> score_all(const std::vector<TimeSeries>& xs, const std::vector<std::size_t>& labels,
                                      const stl::ClassDecomposition& dec, const cvae::CvaeModel& m_x,
                                      const cvae::CvaeModel& m_r, const PipelineConfig& cfg, bool align_inputs,
                                      std::uint64_t stream) {
    if (xs.size() != labels.size()) throw ValidationError("score_all: one label per input required");
    std::vector<score::SrScore> out(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) {
        const TimeSeries input = prepare_input(xs[i], labels[i], dec, align_inputs);
        score::ScoreOptions opts{cfg.samples, example_seed(cfg.seed, stream, i), cfg.score_form};
        out[i] = score::sr_score(input, labels[i], dec, m_x, m_r, opts);
    });
    return out;
}

std::vector<double> values_of(const std::vector<score::SrScore>& scores) {
    std::vector<double> v;
    v.reserve(scores.size());
    for (const auto& s : scores) v.push_back(s.value);
    return v;
}

std::vector<std::size_t> predicted_labels(const std::vector<TimeSeries>& xs, const stl::ClassDecomposition& dec) {
    std::vector<std::size_t> out(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) { out[i] = score::nearest_pattern(xs[i], dec); });
    return out;
}

namespace {

struct SeriesAndLabels {
    std::vector<TimeSeries> xs;
    std::vector<std::size_t> labels;
};

SeriesAndLabels unpack(const LabeledDataset& ds) {
    SeriesAndLabels s;
    for (const auto& ex : ds.examples) {
        s.xs.push_back(ex.series);
        s.labels.push_back(ex.label);
    }
    return s;
}

}  // namespace

CalibrationStage calibrate_stage(const LabeledDataset& fit_data, const stl::ClassDecomposition& dec,
                                 const cvae::CvaeModel& m_x, const cvae::CvaeModel& m_r, const LabeledDataset* val,
                                 const LabeledDataset* val_ood, const PipelineConfig& cfg) {
    CalibrationStage out;
    // Training data is already aligned; score it as is.
    const auto tr = unpack(fit_data);
    const auto train_scores = score_all(tr.xs, tr.labels, dec, m_x, m_r, cfg, false, 0);
    const double initial = cfg.lambda.value_or(cfg.mode == score::CalibrationMode::MeanSigma ? 2.0 : 0.45);
    auto cal = score::calibrate(values_of(train_scores), cfg.mode, initial, cfg.score_form);

    if (cfg.lambda) {
        out.lambda_policy = "fixed";
    } else if (val && !val->empty()) {
        const auto v = unpack(*val);
        const auto id_scores = values_of(score_all(v.xs, v.labels, dec, m_x, m_r, cfg, cfg.align, 1));
        const auto grid = cfg.grid();
        if (val_ood && !val_ood->empty()) {
            const auto o = unpack(*val_ood);
            const auto labels = predicted_labels(o.xs, dec);
            const auto ood_scores =
                values_of(score_all(o.xs, labels, dec, m_x, m_r, cfg, cfg.align, 2));
            cal = score::with_lambda(cal, score::tune_lambda(cal, id_scores, std::span<const double>(ood_scores), grid));
            out.lambda_policy = "tuned_balanced_accuracy";
        } else {
            cal = score::with_lambda(cal, score::tune_lambda(cal, id_scores, std::nullopt, grid));
            out.lambda_policy = "tuned_id_coverage_95";
        }
    } else {
        out.lambda_policy = "default";
    }
    cal.samples = cfg.samples;
    cal.seed = cfg.seed;
    cal.align_inputs = cfg.align;
    cal.model_x_hash = score::digest_hex(cvae::serialize_model(m_x));
    cal.model_r_hash = score::digest_hex(cvae::serialize_model(m_r));
    out.calibration = std::move(cal);
    return out;
}

FittedPipeline fit(const LabeledDataset& train, const LabeledDataset* val, const LabeledDataset* val_ood,
                   const PipelineConfig& cfg) {
    cfg.validate();
    train.validate();
    FittedPipeline f;
    Decomposed d = decompose(train, cfg);
    f.patterns = std::move(d.patterns);
    f.alignment = std::move(d.alignment);
    f.assumption = stl::assumption_check(d.data, f.patterns);

    f.model_x = train_model(d.data, cfg, "x");
    f.model_r = train_model(remainders(d.data, f.patterns), cfg, "r");

    auto stage = calibrate_stage(d.data, f.patterns, f.model_x, f.model_r, val, val_ood, cfg);
    f.calibration = std::move(stage.calibration);
    f.lambda_policy = std::move(stage.lambda_policy);
    return f;
}

}  // namespace srs::pipeline
