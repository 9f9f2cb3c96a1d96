#include "srs/experiment.hpp"

#include <charconv>
#include <fstream>

#include "srs/errors.hpp"

namespace srs::eval {

using nlohmann::json;
using nlohmann::ordered_json;

std::string setting_name(Setting s) { return s == Setting::InDomain ? "in_domain" : "cross_domain"; }

Setting parse_setting(std::string_view s) {
    if (s == "in_domain") return Setting::InDomain;
    if (s == "cross_domain") return Setting::CrossDomain;
    throw ConfigError("unknown experiment setting '" + std::string(s) + "'");
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open experiment spec '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path q(p);
        return q.is_absolute() ? q : base / q;
    };
    ExperimentSpec spec;
    try {
        const auto& id = j.at("id");
        spec.train = resolve(id.at("train").get<std::string>());
        if (id.contains("val")) spec.val = resolve(id.at("val").get<std::string>());
        spec.test = resolve(id.at("test").get<std::string>());
        for (const auto& s : j.at("ood")) {
            spec.ood.push_back({s.at("name").get<std::string>(), resolve(s.at("path").get<std::string>())});
        }
        if (j.contains("val_ood")) spec.val_ood = resolve(j.at("val_ood").get<std::string>());
        if (j.contains("setting")) spec.setting = parse_setting(j.at("setting").get<std::string>());
        if (j.contains("pipeline")) spec.pipeline = pipeline::config_from_json(j.at("pipeline"));
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (spec.ood.empty()) throw ConfigError(path.string() + ": at least one OOD source is required");
    return spec;
}

ordered_json to_json(const ExperimentSpec& spec, const std::filesystem::path& relative_to) {
    auto rel = [&](const std::filesystem::path& p) { return p.lexically_relative(relative_to).generic_string(); };
    ordered_json j;
    j["id"] = {{"train", rel(spec.train)}, {"val", rel(spec.val)}, {"test", rel(spec.test)}};
    auto ood = ordered_json::array();
    for (const auto& s : spec.ood) ood.push_back({{"name", s.name}, {"path", rel(s.path)}});
    j["ood"] = ood;
    if (!spec.val_ood.empty()) j["val_ood"] = rel(spec.val_ood);
    j["setting"] = setting_name(spec.setting);
    j["pipeline"] = pipeline::to_json(spec.pipeline);
    return j;
}

ExperimentData load_experiment_data(const ExperimentSpec& spec) {
    ExperimentData d;
    d.train = io::load_dataset(spec.train, Split::Train);
    if (!spec.val.empty()) d.val = io::load_dataset(spec.val, Split::Validation);
    d.test = io::load_dataset(spec.test, Split::Test);
    for (const auto& s : spec.ood) d.ood.push_back({s.name, io::load_dataset(s.path, Split::Test)});
    if (!spec.val_ood.empty()) d.val_ood = io::load_dataset(spec.val_ood, Split::Validation);
    return d;
}

namespace {

std::vector<TimeSeries> series_of(const LabeledDataset& ds) {
    std::vector<TimeSeries> xs;
    for (const auto& ex : ds.examples) xs.push_back(ex.series);
    return xs;
}

std::vector<std::size_t> labels_of(const LabeledDataset& ds) {
    std::vector<std::size_t> ls;
    for (const auto& ex : ds.examples) ls.push_back(ex.label);
    return ls;
}

ordered_json f1_json(double auroc_value, const F1Point& f) {
    return {{"auroc", auroc_value}, {"max_f1", f.f1}, {"f1_threshold", f.threshold}};
}

}  // namespace

ExperimentResult run_experiment(const ExperimentData& data, const pipeline::PipelineConfig& cfg, Setting setting) {
    const auto& h = data.train.header;
    ExperimentResult result;
    ordered_json& rep = result.report;
    rep["setting"] = setting_name(setting);
    rep["header"] = {{"channels", h.channels}, {"length", h.length}, {"classes", h.classes}};
    rep["config"] = pipeline::to_json(cfg);

    LabeledDataset val_ood;
    if (!data.val_ood.empty()) val_ood = io::reconcile_dataset(data.val_ood, h.channels, h.length);
    const auto fitted =
        pipeline::fit(data.train, data.val.empty() ? nullptr : &data.val, val_ood.empty() ? nullptr : &val_ood, cfg);

    ordered_json per_class = ordered_json::array();
    for (const auto& c : fitted.assumption.per_class) {
        per_class.push_back({{"class", c.label}, {"count", c.count}, {"mean_mae", c.mean_mae}, {"mean_dtw", c.mean_dtw}});
    }
    rep["decomposition"] = {{"mean_mae", fitted.assumption.mean_mae},
                            {"mean_dtw", fitted.assumption.mean_dtw},
                            {"per_class", per_class}};
    ordered_json passes = ordered_json::array();
    for (const auto& p : fitted.alignment) {
        passes.push_back({{"changed", p.changed},
                          {"mean_cost_before", p.mean_cost_before},
                          {"mean_cost_after", p.mean_cost_after}});
    }
    rep["alignment"] = {{"enabled", cfg.align}, {"passes", passes}};
    rep["models"] = {{"x", {{"train_mae", fitted.model_x.train_mae}}}, {"r", {{"train_mae", fitted.model_r.train_mae}}}};
    const auto& cal = fitted.calibration;
    rep["calibration"] = {{"mode", score::mode_name(cal.mode)},
                          {"score_form", score::score_form_name(cal.form)},
                          {"mu_sr", cal.mean},
                          {"sigma_sr", cal.sigma},
                          {"lambda", cal.lambda},
                          {"lambda_policy", fitted.lambda_policy},
                          {"tau_l", cal.lower},
                          {"tau_u", cal.upper}};
    rep["ranking"] = "ood_magnitude: distance of the SR score from the calibrated centre (constructed for AUROC; "
                     "the detector itself is interval based)";
    rep["ll_baseline"] = "negated input log-likelihood -l_x";

    // ID test set with oracle labels; shared by every OOD source.
    const auto id_xs = series_of(data.test);
    const auto id_labels = labels_of(data.test);
    std::vector<score::SrScore> id_scores;
    std::string id_error;
    try {
        id_scores = pipeline::score_all(id_xs, id_labels, fitted.patterns, fitted.model_x, fitted.model_r, cfg,
                                        cfg.align, 10);
    } catch (const Error& e) {
        id_error = e.what();
    }

    ordered_json sources = ordered_json::array();
    for (std::size_t s = 0; s < data.ood.size(); ++s) {
        SourceResult sr;
        sr.name = data.ood[s].name;
        ordered_json js;
        js["name"] = sr.name;
        try {
            if (!id_error.empty()) throw Error("ID test scoring failed: " + id_error);
            const auto ood_ds = io::reconcile_dataset(data.ood[s].data, h.channels, h.length);
            const auto ood_xs = series_of(ood_ds);
            const auto ood_labels = pipeline::predicted_labels(ood_xs, fitted.patterns);
            sr.ood_scores = pipeline::score_all(ood_xs, ood_labels, fitted.patterns, fitted.model_x, fitted.model_r,
                                                cfg, cfg.align, 10);
            sr.id_scores = id_scores;
            ScoredSet sr_set;
            ScoredSet ll_set;
            for (const auto& sc : sr.id_scores) {
                const auto d = score::detect(sc, cal);
                sr.id_magnitude.push_back(d.magnitude);
                sr_set.id.push_back(d.magnitude);
                ll_set.id.push_back(-sc.l_x);
                sr.id_flagged += d.ood ? 1 : 0;
            }
            for (const auto& sc : sr.ood_scores) {
                const auto d = score::detect(sc, cal);
                sr.ood_magnitude.push_back(d.magnitude);
                sr_set.ood.push_back(d.magnitude);
                ll_set.ood.push_back(-sc.l_x);
                sr.ood_flagged += d.ood ? 1 : 0;
            }
            sr.n_id = sr_set.id.size();
            sr.n_ood = sr_set.ood.size();
            sr.sr_auroc = auroc(sr_set);
            sr.sr_f1 = max_f1(sr_set);
            sr.ll_auroc = auroc(ll_set);
            sr.ll_f1 = max_f1(ll_set);
            sr.ok = true;
            js["status"] = "ok";
            js["n_id"] = sr.n_id;
            js["n_ood"] = sr.n_ood;
            js[cfg.align ? "sr_a" : "sr"] = f1_json(sr.sr_auroc, sr.sr_f1);
            js["ll"] = f1_json(sr.ll_auroc, sr.ll_f1);
            js["decisions"] = {{"id_flagged_ood", sr.id_flagged},
                               {"id_total", sr.n_id},
                               {"ood_flagged_ood", sr.ood_flagged},
                               {"ood_total", sr.n_ood}};
        } catch (const Error& e) {
            sr.ok = false;
            sr.error = e.what();
            js["status"] = "failed";
            js["error"] = sr.error;
        }
        sources.push_back(js);
        result.sources.push_back(std::move(sr));
    }
    rep["sources"] = sources;
    return result;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    return run_experiment(load_experiment_data(spec), spec.pipeline, spec.setting);
}

std::string histogram_csv(const ExperimentResult& result) {
    std::string out = "source,group,index,label_used,l_x,l_r,score,magnitude\n";
    auto num = [](double v) {
        char buf[32];
        auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, p);
    };
    for (const auto& s : result.sources) {
        if (!s.ok) continue;
        auto emit = [&](const char* group, const std::vector<score::SrScore>& sc, const std::vector<double>& mag) {
            for (std::size_t i = 0; i < sc.size(); ++i) {
                out += s.name + ',' + group + ',' + std::to_string(i) + ',' + std::to_string(sc[i].label) + ',' +
                       num(sc[i].l_x) + ',' + num(sc[i].l_r) + ',' + num(sc[i].value) + ',' + num(mag[i]) + '\n';
            }
        };
        emit("id", s.id_scores, s.id_magnitude);
        emit("ood", s.ood_scores, s.ood_magnitude);
    }
    return out;
}

}  // namespace srs::eval
