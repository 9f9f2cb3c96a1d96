#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "srs/align.hpp"
#include "srs/cvae.hpp"
#include "srs/dataset.hpp"
#include "srs/errors.hpp"
#include "srs/experiment.hpp"
#include "srs/parallel.hpp"
#include "srs/pipeline.hpp"
#include "srs/scoring.hpp"
#include "srs/stl.hpp"
#include "srs/synthetic.hpp"

namespace fs = std::filesystem;
using namespace srs;

namespace {

struct Globals {
    std::uint64_t seed = 7;
    std::size_t threads = 0;
    std::string config;
    CLI::Option* seed_opt = nullptr;
};

/// Pipeline settings that can be given as flags; each one overrides the
/// config file only when it was actually passed.
struct PipelineFlags {
    std::size_t epochs = 0;
    double learning_rate = 0.0;
    std::size_t samples = 0;
    std::string score_form;
    std::string mode;
    double lambda = 0.0;
    bool align = false;
    std::size_t align_passes = 0;
    std::vector<std::size_t> conv_channels;
    std::size_t latent_dim = 0;
    CLI::Option* epochs_opt = nullptr;
    CLI::Option* lr_opt = nullptr;
    CLI::Option* samples_opt = nullptr;
    CLI::Option* form_opt = nullptr;
    CLI::Option* mode_opt = nullptr;
    CLI::Option* lambda_opt = nullptr;
    CLI::Option* align_opt = nullptr;
    CLI::Option* passes_opt = nullptr;
    CLI::Option* conv_opt = nullptr;
    CLI::Option* latent_opt = nullptr;

    void add_to(CLI::App* app) {
        epochs_opt = app->add_option("--epochs", epochs, "Training passes over the data")->envname("SRS_EPOCHS");
        lr_opt = app->add_option("--lr", learning_rate, "Adam learning rate");
        samples_opt = app->add_option("--samples", samples, "Monte-Carlo samples per likelihood")
                          ->envname("SRS_SAMPLES");
        form_opt = app->add_option("--score-form", score_form, "log_ratio or log_diff")
                       ->check(CLI::IsMember({"log_ratio", "log_diff"}));
        mode_opt = app->add_option("--mode", mode, "mean_sigma or quantile")
                       ->check(CLI::IsMember({"mean_sigma", "quantile"}));
        lambda_opt = app->add_option("--lambda", lambda, "Fixed lambda (tuned on validation data otherwise)");
        align_opt = app->add_flag("--align,!--no-align", align, "Align series to class patterns");
        passes_opt = app->add_option("--align-passes", align_passes, "Alignment passes");
        conv_opt = app->add_option("--conv-channels", conv_channels, "Encoder conv widths")->delimiter(',');
        latent_opt = app->add_option("--latent-dim", latent_dim, "Latent dimension");
    }

    void apply(pipeline::PipelineConfig& c) const {
        if (epochs_opt && epochs_opt->count()) c.train.iterations = epochs;
        if (lr_opt && lr_opt->count()) c.train.learning_rate = learning_rate;
        if (samples_opt && samples_opt->count()) c.samples = samples;
        if (form_opt && form_opt->count()) c.score_form = score::parse_score_form(score_form);
        if (mode_opt && mode_opt->count()) c.mode = score::parse_mode(mode);
        if (lambda_opt && lambda_opt->count()) c.lambda = lambda;
        if (align_opt && align_opt->count()) c.align = align;
        if (passes_opt && passes_opt->count()) c.align_passes = align_passes;
        if (conv_opt && conv_opt->count()) c.cvae.conv_channels = conv_channels;
        if (latent_opt && latent_opt->count()) c.cvae.latent_dim = latent_dim;
    }
};

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open '" + p.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(p.string() + ": " + e.what());
    }
}

/// built-in defaults < base (e.g. experiment file) < --config < flags
pipeline::PipelineConfig resolve_config(const Globals& g, const PipelineFlags* flags,
                                        std::optional<pipeline::PipelineConfig> base = std::nullopt) {
    pipeline::PipelineConfig c = base.value_or(pipeline::PipelineConfig{});
    if (!g.config.empty()) {
        auto j = pipeline::to_json(c);
        j.merge_patch(read_json(g.config));
        c = pipeline::config_from_json(j);
    }
    if (g.seed_opt->count()) c.seed = g.seed;
    if (flags) flags->apply(c);
    c.validate();
    return c;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + p.string() + "'");
}

std::vector<std::size_t> read_labels(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open labels file '" + p.string() + "'");
    std::vector<std::size_t> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ss(line);
        long long v = -1;
        std::string rest;
        if (!(ss >> v) || v < 0 || (ss >> rest)) {
            throw ParseError(p.string() + ":" + std::to_string(lineno) + ": expected one non-negative class label");
        }
        labels.push_back(static_cast<std::size_t>(v));
    }
    return labels;
}

std::vector<TimeSeries> series_of(const LabeledDataset& ds) {
    std::vector<TimeSeries> xs;
    xs.reserve(ds.examples.size());
    for (const auto& ex : ds.examples) xs.push_back(ex.series);
    return xs;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Seasonal ratio scoring for time-series OOD detection", "srs"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    g.seed_opt = app.add_option("--seed", g.seed, "Random seed")->envname("SRS_SEED");
    app.add_option("--threads", g.threads, "Worker thread cap (0 = hardware)")->envname("SRS_THREADS");
    app.add_option("--config", g.config, "Pipeline config JSON")->envname("SRS_CONFIG");

    // synth
    auto* synth = app.add_subcommand("synth", "Write the synthetic benchmark and an experiment file");
    std::string synth_out;
    eval::SyntheticSpec sspec;
    std::string ood_family = "sinusoid";
    PipelineFlags synth_flags;
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--max-shift", sspec.max_shift, "Random time shift bound");
    synth->add_option("--noise", sspec.noise_sigma, "Gaussian noise sigma");
    synth->add_option("--channels", sspec.channels);
    synth->add_option("--length", sspec.length);
    synth->add_option("--classes", sspec.classes);
    synth->add_option("--train-per-class", sspec.train_per_class);
    synth->add_option("--val-per-class", sspec.val_per_class);
    synth->add_option("--test-per-class", sspec.test_per_class);
    synth->add_option("--ood-count", sspec.ood_count);
    synth->add_option("--ood-family", ood_family)->check(CLI::IsMember({"sinusoid", "square"}));
    synth_flags.add_to(synth);

    // decompose
    auto* dec_cmd = app.add_subcommand("decompose", "Per-class STL patterns");
    std::string dataset, split = "train", out;
    double span = 0.75;
    std::string report_out;
    dec_cmd->add_option("--dataset", dataset)->required();
    dec_cmd->add_option("--split", split)->check(CLI::IsMember({"train", "val", "validation", "test"}));
    dec_cmd->add_option("--out", out, "Patterns file")->required();
    auto* span_opt = dec_cmd->add_option("--span", span, "Seasonal smoother span (fraction of periods)");
    dec_cmd->add_option("--report", report_out, "Assumption check JSON");

    // align
    auto* align_cmd = app.add_subcommand("align", "Align a dataset to its class patterns");
    std::string patterns_path, patterns_out;
    std::size_t passes = 1;
    align_cmd->add_option("--dataset", dataset)->required();
    align_cmd->add_option("--split", split)->check(CLI::IsMember({"train", "val", "validation", "test"}));
    align_cmd->add_option("--patterns", patterns_path)->required();
    auto* passes_opt = align_cmd->add_option("--passes", passes);
    align_cmd->add_option("--out", out, "Aligned dataset")->required();
    align_cmd->add_option("--patterns-out", patterns_out, "Patterns recomputed from the aligned data");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a CVAE on series (x) or remainders (r)");
    std::string target = "x";
    PipelineFlags train_flags;
    train_cmd->add_option("--dataset", dataset)->required();
    train_cmd->add_option("--target", target)->check(CLI::IsMember({"x", "r"}));
    train_cmd->add_option("--patterns", patterns_path, "Required for --target r");
    train_cmd->add_option("--out", out, "Model file")->required();
    train_flags.add_to(train_cmd);

    // calibrate
    auto* cal_cmd = app.add_subcommand("calibrate", "Calibrate the SR interval on training scores");
    std::string model_x, model_r, val_path, val_ood_path;
    PipelineFlags cal_flags;
    cal_cmd->add_option("--dataset", dataset, "Data the models were trained on")->required();
    cal_cmd->add_option("--patterns", patterns_path)->required();
    cal_cmd->add_option("--model-x", model_x)->required();
    cal_cmd->add_option("--model-r", model_r)->required();
    cal_cmd->add_option("--val", val_path, "ID validation set for lambda tuning");
    cal_cmd->add_option("--val-ood", val_ood_path, "OOD validation set for lambda tuning");
    cal_cmd->add_option("--out", out, "Calibration file")->required();
    cal_flags.add_to(cal_cmd);

    // detect
    auto* det_cmd = app.add_subcommand("detect", "Flag inputs as ID or OOD");
    std::string input, labels_path, cal_path;
    det_cmd->add_option("--input", input)->required();
    det_cmd->add_option("--labels", labels_path, "One class label per line (nearest pattern otherwise)");
    det_cmd->add_option("--patterns", patterns_path)->required();
    det_cmd->add_option("--model-x", model_x)->required();
    det_cmd->add_option("--model-r", model_r)->required();
    det_cmd->add_option("--calibration", cal_path)->required();
    det_cmd->add_option("--out", out, "decisions.jsonl")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Run an experiment and write the report");
    std::string spec_path, hist_out;
    PipelineFlags eval_flags;
    eval_cmd->add_option("--spec", spec_path)->required();
    eval_cmd->add_option("--out", out, "Report JSON")->required();
    eval_cmd->add_option("--histogram", hist_out, "Per-example score CSV");
    eval_flags.add_to(eval_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        for (auto& ch : msg) {
            if (ch == '\n') ch = ' ';
        }
        std::cerr << "srs: usage error: " << msg << '\n';
        return 1;
    }

    try {
        set_thread_count(g.threads);

        if (synth->parsed()) {
            sspec.ood_family = ood_family == "square" ? eval::OodFamily::Square : eval::OodFamily::Sinusoid;
            const auto cfg = resolve_config(g, &synth_flags);
            const auto data = eval::make_synthetic(sspec, cfg.seed);
            const fs::path dir(synth_out);
            fs::create_directories(dir);
            io::save_dataset(data.train, dir / "train.txt");
            io::save_dataset(data.val, dir / "val.txt");
            io::save_dataset(data.test, dir / "test.txt");
            io::save_dataset(data.ood, dir / "ood.txt");
            eval::ExperimentSpec spec;
            spec.train = dir / "train.txt";
            spec.val = dir / "val.txt";
            spec.test = dir / "test.txt";
            spec.ood.push_back({"synthetic_ood", dir / "ood.txt"});
            spec.pipeline = cfg;
            write_text(dir / "experiment.json", eval::to_json(spec, dir).dump(2) + "\n");
        } else if (dec_cmd->parsed()) {
            auto cfg = resolve_config(g, nullptr);
            if (span_opt->count()) cfg.stl.seasonal_span = span;
            cfg.stl.validate();
            const auto ds = io::load_dataset(dataset, parse_split(split));
            const auto dec = stl::class_patterns(ds, cfg.stl);
            stl::save_patterns(dec, out);
            if (!report_out.empty()) {
                const auto rep = stl::assumption_check(ds, dec);
                nlohmann::ordered_json j;
                j["mean_mae"] = rep.mean_mae;
                j["mean_dtw"] = rep.mean_dtw;
                auto pc = nlohmann::ordered_json::array();
                for (const auto& c : rep.per_class) {
                    pc.push_back({{"class", c.label}, {"count", c.count}, {"mean_mae", c.mean_mae},
                                  {"mean_dtw", c.mean_dtw}});
                }
                j["per_class"] = pc;
                write_text(report_out, j.dump(2) + "\n");
            }
        } else if (align_cmd->parsed()) {
            auto cfg = resolve_config(g, nullptr);
            if (passes_opt->count()) cfg.align_passes = passes;
            if (cfg.align_passes == 0) throw ConfigError("--passes must be at least 1");
            const auto ds = io::load_dataset(dataset, parse_split(split));
            const auto dec = stl::load_patterns(patterns_path);
            const auto res = align::align_dataset(ds, dec, cfg.align_passes, cfg.stl);
            io::save_dataset(res.data, out);
            if (!patterns_out.empty()) stl::save_patterns(res.patterns, patterns_out);
        } else if (train_cmd->parsed()) {
            const auto cfg = resolve_config(g, &train_flags);
            auto ds = io::load_dataset(dataset, Split::Train);
            if (target == "r") {
                if (patterns_path.empty()) throw ConfigError("--target r requires --patterns");
                ds = pipeline::remainders(ds, stl::load_patterns(patterns_path));
            }
            cvae::save_model(pipeline::train_model(ds, cfg, target), out);
        } else if (cal_cmd->parsed()) {
            const auto cfg = resolve_config(g, &cal_flags);
            const auto ds = io::load_dataset(dataset, Split::Train);
            const auto dec = stl::load_patterns(patterns_path);
            const auto mx = cvae::load_model(model_x);
            const auto mr = cvae::load_model(model_r);
            std::optional<LabeledDataset> val, val_ood;
            if (!val_path.empty()) val = io::load_dataset(val_path, Split::Validation);
            if (!val_ood_path.empty()) {
                val_ood = io::reconcile_dataset(io::load_dataset(val_ood_path, Split::Validation),
                                                ds.header.channels, ds.header.length);
            }
            const auto stage = pipeline::calibrate_stage(ds, dec, mx, mr, val ? &*val : nullptr,
                                                         val_ood ? &*val_ood : nullptr, cfg);
            score::save_calibration(stage.calibration, out);
        } else if (det_cmd->parsed()) {
            const auto cal = score::load_calibration(cal_path);
            const auto dec = stl::load_patterns(patterns_path);
            const auto mx = cvae::load_model(model_x);
            const auto mr = cvae::load_model(model_r);
            if (!cal.model_x_hash.empty() && cal.model_x_hash != score::digest_hex(cvae::serialize_model(mx))) {
                throw ValidationError("model-x does not match the calibration's model hash");
            }
            if (!cal.model_r_hash.empty() && cal.model_r_hash != score::digest_hex(cvae::serialize_model(mr))) {
                throw ValidationError("model-r does not match the calibration's model hash");
            }
            const auto raw = io::load_dataset(input, Split::Test);
            const auto ds = io::reconcile_dataset(raw, dec.header.channels, dec.header.length);
            const auto xs = series_of(ds);
            std::vector<std::size_t> labels;
            if (!labels_path.empty()) {
                labels = read_labels(labels_path);
                if (labels.size() != xs.size()) {
                    throw ValidationError("labels file has " + std::to_string(labels.size()) + " labels for " +
                                          std::to_string(xs.size()) + " inputs");
                }
            } else {
                labels = pipeline::predicted_labels(xs, dec);
            }
            pipeline::PipelineConfig cfg;
            cfg.samples = cal.samples;
            cfg.seed = cal.seed;
            cfg.score_form = cal.form;
            const auto scores = pipeline::score_all(xs, labels, dec, mx, mr, cfg, cal.align_inputs, 0);
            std::string lines;
            for (std::size_t i = 0; i < scores.size(); ++i) {
                const auto d = score::detect(scores[i], cal);
                nlohmann::ordered_json j;
                j["id"] = i;
                j["label_used"] = scores[i].label;
                j["l_x"] = scores[i].l_x;
                j["l_r"] = scores[i].l_r;
                j["score"] = scores[i].value;
                j["magnitude"] = d.magnitude;
                j["decision"] = d.ood ? "OOD" : "ID";
                lines += j.dump() + "\n";
            }
            write_text(out, lines);
        } else if (eval_cmd->parsed()) {
            auto spec = eval::load_experiment_spec(spec_path);
            spec.pipeline = resolve_config(g, &eval_flags, spec.pipeline);
            const auto result = eval::run_experiment(spec);
            write_text(out, result.report.dump(2) + "\n");
            if (!hist_out.empty()) write_text(hist_out, eval::histogram_csv(result));
        }
    } catch (const std::exception& e) {
        std::string msg = e.what();
        for (auto& ch : msg) {
            if (ch == '\n') ch = ' ';
        }
        std::cerr << "srs: error: " << msg << '\n';
        return 1;
    }
    return 0;
}
