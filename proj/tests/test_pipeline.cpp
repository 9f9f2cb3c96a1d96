#include <doctest.h>

#include "srs/errors.hpp"
#include "srs/experiment.hpp"
#include "srs/pipeline.hpp"
#include "srs/synthetic.hpp"

using namespace srs;

namespace {

pipeline::PipelineConfig quick_config() {
    pipeline::PipelineConfig c;
    c.cvae.conv_channels = {4, 8};
    c.cvae.latent_dim = 4;
    c.train.iterations = 20;
    c.samples = 8;
    c.score_form = score::ScoreForm::LogDiff;
    return c;
}

eval::SyntheticSpec small_spec() {
    eval::SyntheticSpec sp;
    sp.length = 32;
    sp.train_per_class = 12;
    sp.val_per_class = 6;
    sp.test_per_class = 6;
    sp.ood_count = 12;
    return sp;
}

}  // namespace

TEST_SUITE("pipeline") {
    TEST_CASE("config json round trip") {
        auto c = quick_config();
        c.align = true;
        c.lambda = 1.25;
        c.mode = score::CalibrationMode::Quantile;
        c.lambda = 0.3;
        c.stl.robust_iters = 3;
        const auto j = pipeline::to_json(c);
        const auto back = pipeline::config_from_json(nlohmann::json::parse(j.dump()));
        CHECK(pipeline::to_json(back).dump() == j.dump());
        CHECK(back.align);
        CHECK(*back.lambda == 0.3);
    }

    TEST_CASE("config rejects unknown keys and inconsistent values") {
        CHECK_THROWS_AS(pipeline::config_from_json(nlohmann::json::parse(R"({"sead": 1})")), ConfigError);
        CHECK_THROWS_AS(pipeline::config_from_json(nlohmann::json::parse(R"({"train": {"lr": 1}})")), ConfigError);
        CHECK_THROWS_AS(pipeline::config_from_json(nlohmann::json::parse(R"({"mode": "quantile", "lambda": 0.7})")),
                        ConfigError);
        CHECK_THROWS_AS(pipeline::config_from_json(nlohmann::json::parse(R"({"samples": 0})")), ConfigError);
        const auto c = pipeline::config_from_json(nlohmann::json::parse(R"({"samples": 5})"));
        CHECK(c.samples == 5);
        CHECK(c.train.iterations == 500);
    }

    TEST_CASE("example seeds differ across streams and indices") {
        CHECK(pipeline::example_seed(7, 0, 0) != pipeline::example_seed(7, 0, 1));
        CHECK(pipeline::example_seed(7, 0, 0) != pipeline::example_seed(7, 1, 0));
        CHECK(pipeline::example_seed(7, 0, 0) != pipeline::example_seed(8, 0, 0));
        CHECK(pipeline::example_seed(7, 3, 4) == pipeline::example_seed(7, 3, 4));
    }

    TEST_CASE("fit produces a consistent calibration") {
        const auto d = eval::make_synthetic(small_spec(), 7);
        const auto cfg = quick_config();
        const auto f = pipeline::fit(d.train, &d.val, nullptr, cfg);
        CHECK(f.lambda_policy == "tuned_id_coverage_95");
        CHECK(f.calibration.form == score::ScoreForm::LogDiff);
        CHECK(f.calibration.lower <= f.calibration.upper);
        CHECK(f.calibration.train_scores.size() == d.train.size());
        CHECK(f.calibration.model_x_hash == score::digest_hex(cvae::serialize_model(f.model_x)));
        CHECK(f.model_x.target == "x");
        CHECK(f.model_r.target == "r");

        auto fixed = cfg;
        fixed.lambda = 1.0;
        CHECK(pipeline::fit(d.train, &d.val, nullptr, fixed).lambda_policy == "fixed");
        CHECK(pipeline::fit(d.train, nullptr, nullptr, cfg).lambda_policy == "default");
        CHECK(pipeline::fit(d.train, &d.val, &d.ood, cfg).lambda_policy == "tuned_balanced_accuracy");
    }

    TEST_CASE("experiment: ID test scored against itself") {
        const auto d = eval::make_synthetic(small_spec(), 7);
        eval::ExperimentData data{d.train, d.val, d.test, {{"self", d.test}, {"ood", d.ood}}, {}};
        const auto r = eval::run_experiment(data, quick_config());
        REQUIRE(r.sources.size() == 2);
        REQUIRE(r.sources[0].ok);
        CHECK(std::abs(r.sources[0].sr_auroc - 0.5) <= 0.05);
        CHECK(r.report["sources"][0]["status"] == "ok");
        CHECK(r.report.contains("ranking"));
        const auto csv = eval::histogram_csv(r);
        CHECK(csv.rfind("source,group,index,label_used,l_x,l_r,score,magnitude\n", 0) == 0);
        // header + (6*3 ID + 18 self) + (18 ID + 12 OOD)
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 36 + 30);
    }

    TEST_CASE("experiment: OOD data is reconciled and failures are marked") {
        const auto d = eval::make_synthetic(small_spec(), 7);
        const auto wide = io::reconcile_dataset(d.ood, 3, 40);
        auto cfg = quick_config();
        cfg.score_form = score::ScoreForm::LogRatio;
        eval::ExperimentData data{d.train, d.val, d.test, {{"wide", wide}}, {}};
        const auto r = eval::run_experiment(data, cfg);
        REQUIRE(r.sources.size() == 1);
        if (r.sources[0].ok) {
            CHECK(r.sources[0].n_ood == wide.size());
        } else {
            CHECK(r.report["sources"][0]["status"] == "failed");
            CHECK(!r.sources[0].error.empty());
        }
    }

    TEST_CASE("experiment reports are reproducible") {
        const auto d = eval::make_synthetic(small_spec(), 9);
        eval::ExperimentData data{d.train, d.val, d.test, {{"ood", d.ood}}, {}};
        const auto a = eval::run_experiment(data, quick_config());
        const auto b = eval::run_experiment(data, quick_config());
        CHECK(a.report.dump() == b.report.dump());
        CHECK(eval::histogram_csv(a) == eval::histogram_csv(b));
    }

    TEST_CASE("experiment spec file") {
        CHECK_THROWS_AS(eval::load_experiment_spec("/nonexistent/spec.json"), IoError);
        CHECK(eval::parse_setting("cross_domain") == eval::Setting::CrossDomain);
        CHECK_THROWS_AS(eval::parse_setting("sideways"), ConfigError);
    }
}
