#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "srs/errors.hpp"
#include "srs/scoring.hpp"
#include "toy_models.hpp"

using namespace srs;
using namespace srs::score;

TEST_SUITE("scoring") {
    TEST_CASE("score forms") {
        CHECK(combine(-5.0, -5.0, ScoreForm::LogRatio) == 1.0);
        CHECK(combine(-5.0, -5.0, ScoreForm::LogDiff) == 0.0);
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> u(-100.0, -1.0);
        for (int k = 0; k < 100; ++k) {
            const double a = u(rng), b = u(rng);
            CHECK(combine(a, b, ScoreForm::LogRatio) == a / b);
            CHECK(combine(a, b, ScoreForm::LogDiff) == a - b);
        }
        CHECK_THROWS_AS(combine(-1.0, 1e-7, ScoreForm::LogRatio), NumericError);
        CHECK_NOTHROW(combine(-1.0, 1e-7, ScoreForm::LogDiff));
        CHECK(parse_score_form("log_diff") == ScoreForm::LogDiff);
        CHECK_THROWS_AS(parse_score_form("ratio"), ConfigError);
    }

    TEST_CASE("sr_score composes the two likelihood calls") {
        const auto m_x = toy::standard_toy();
        const auto m_r = toy::LinearGaussian({{0.5, 0.0}, {0.0, 0.5}, {0.2, 0.2}, {-0.3, 0.1}}, {0, 0, 0, 0}, 0.3);
        stl::ClassDecomposition dec;
        dec.header = {1, 4, 1};
        dec.patterns[0] = TimeSeries(1, 4, {0.2, 0.1, -0.1, 0.4});
        dec.trends[0] = {0.0};
        const TimeSeries x(1, 4, {0.6, -0.2, 0.5, 0.3});
        ScoreOptions opts{64, 11, ScoreForm::LogRatio};
        const auto s = sr_score(x, 0, dec, m_x, m_r, opts);
        const double lx = cvae::mc_log_likelihood(m_x, x, 0, 64, 11);
        const double lr = cvae::mc_log_likelihood(m_r, x - dec.pattern(0), 0, 64, 11);
        CHECK(s.l_x == lx);
        CHECK(s.l_r == lr);
        CHECK(s.value == lx / lr);
        opts.form = ScoreForm::LogDiff;
        CHECK(sr_score(x, 0, dec, m_x, m_r, opts).value == lx - lr);

        // x equal to the pattern gives a zero remainder and a finite score
        const auto z = sr_score(dec.pattern(0), 0, dec, m_x, m_r, opts);
        CHECK(std::isfinite(z.value));
    }

    TEST_CASE("calibration example") {
        const std::vector<double> s{0.9, 1.0, 1.1};
        const auto cal = calibrate(s, CalibrationMode::MeanSigma, 1.0);
        CHECK(cal.mean == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(cal.sigma - 0.0816496581) <= 1e-10);
        CHECK(std::abs(cal.lower - 0.9183503419) <= 1e-10);
        CHECK(std::abs(cal.upper - 1.0816496581) <= 1e-10);

        const auto zero = calibrate(s, CalibrationMode::MeanSigma, 0.0);
        CHECK(zero.lower == zero.mean);
        CHECK(zero.upper == zero.mean);

        const auto q = calibrate(s, CalibrationMode::Quantile, 0.5);
        CHECK(q.lower == 0.9);
        CHECK(q.upper == 1.1);
        CHECK_THROWS(calibrate(std::vector<double>{1.0}, CalibrationMode::MeanSigma, 1.0));
    }

    TEST_CASE("calibration statistics match a two-pass computation") {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> g(5.0, 2.0);
        for (int k = 0; k < 20; ++k) {
            std::vector<double> v(10 + rng() % 200);
            for (auto& x : v) x = g(rng);
            const auto cal = calibrate(v, CalibrationMode::MeanSigma, 1.5);
            CHECK(std::abs(cal.mean - oracle::mean(v)) <= 1e-12 * std::abs(oracle::mean(v)));
            CHECK(std::abs(cal.sigma - oracle::population_sd(v)) <= 1e-12);
            CHECK(cal.lower == cal.mean - 1.5 * cal.sigma);
            CHECK(cal.upper == cal.mean + 1.5 * cal.sigma);
        }
    }

    TEST_CASE("degenerate spread") {
        const std::vector<double> s{2.0, 2.0, 2.0};
        const auto cal = calibrate(s, CalibrationMode::MeanSigma, 1.0);
        CHECK(cal.lower < 2.0);
        CHECK(cal.upper > 2.0);
        CHECK(cal.upper - cal.lower == doctest::Approx(2e-9));
        CHECK(is_in_distribution(2.0, cal));
        CHECK_FALSE(is_in_distribution(2.1, cal));
    }

    TEST_CASE("quantiles") {
        const std::vector<double> v{1.0, 2.0, 4.0, 8.0};
        CHECK(quantile(v, 0.0) == 1.0);
        CHECK(quantile(v, 1.0) == 8.0);
        CHECK(quantile(v, 0.5) == 3.0);
        CHECK(quantile(v, 1.0 / 3.0) == doctest::Approx(2.0));
        const auto cal = calibrate(v, CalibrationMode::Quantile, 0.25);
        CHECK(cal.lower == quantile(v, 0.25));
        CHECK(cal.upper == quantile(v, 0.75));
    }

    TEST_CASE("lambda tuning without OOD: smallest grid value covering 95%") {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> g(1.0, 0.1);
        std::vector<double> train(500), val(200);
        for (auto& x : train) x = g(rng);
        for (auto& x : val) x = g(rng);
        const auto base = calibrate(train, CalibrationMode::MeanSigma, 1.0);
        const std::vector<double> grid{1.0, 2.0, 3.0};
        double expected = 3.0;
        for (double lam : grid) {
            const double lo = base.mean - lam * base.sigma, hi = base.mean + lam * base.sigma;
            std::size_t in = 0;
            for (double v : val) in += (v >= lo && v <= hi) ? 1 : 0;
            if (in >= 190) {
                expected = lam;
                break;
            }
        }
        CHECK(tune_lambda(base, val, std::nullopt, grid) == expected);
        CHECK_THROWS_AS(tune_lambda(base, val, std::nullopt, std::vector<double>{}), ConfigError);
    }

    TEST_CASE("lambda tuning with OOD: argmax of balanced accuracy over the grid") {
        std::mt19937_64 rng(6);
        std::normal_distribution<double> id(0.0, 1.0), ood(2.0, 1.0);
        std::vector<double> train(300), vid(100), vood(100);
        for (auto& x : train) x = id(rng);
        for (auto& x : vid) x = id(rng);
        for (auto& x : vood) x = ood(rng);
        const auto base = calibrate(train, CalibrationMode::MeanSigma, 1.0);
        const auto grid = default_lambda_grid(CalibrationMode::MeanSigma);
        double best = -1.0, best_lambda = 0.0;
        for (double lam : grid) {
            const double lo = base.mean - lam * base.sigma, hi = base.mean + lam * base.sigma;
            double a = 0.0, b = 0.0;
            for (double v : vid) a += (v >= lo && v <= hi) ? 1 : 0;
            for (double v : vood) b += (v < lo || v > hi) ? 1 : 0;
            const double acc = 0.5 * (a / 100.0 + b / 100.0);
            if (acc > best) {
                best = acc;
                best_lambda = lam;
            }
        }
        CHECK(tune_lambda(base, vid, std::span<const double>(vood), grid) == best_lambda);

        // perfectly separated sets reach accuracy 1
        const std::vector<double> sid{0.0, 0.1, -0.1}, sood{10.0, -10.0};
        const auto sep = calibrate(sid, CalibrationMode::MeanSigma, 1.0);
        const double lam = tune_lambda(sep, sid, std::span<const double>(sood), grid);
        CHECK(balanced_accuracy(with_lambda(sep, lam), sid, sood) == 1.0);
    }

    TEST_CASE("default grids") {
        const auto g1 = default_lambda_grid(CalibrationMode::MeanSigma);
        CHECK(g1.size() == 12);
        CHECK(g1.front() == 0.25);
        CHECK(g1.back() == 3.0);
        const auto g2 = default_lambda_grid(CalibrationMode::Quantile);
        CHECK(g2.front() == doctest::Approx(0.05));
        CHECK(g2.back() == doctest::Approx(0.5));
    }

    TEST_CASE("ood magnitude") {
        const std::vector<double> s{0.8, 0.9, 1.0, 1.1, 1.2, 1.05, 0.95};
        for (auto mode : {CalibrationMode::MeanSigma, CalibrationMode::Quantile}) {
            const auto cal = calibrate(s, mode, mode == CalibrationMode::MeanSigma ? 2.0 : 0.4);
            const double centre = mode == CalibrationMode::MeanSigma ? cal.mean : cal.median;
            CHECK(ood_magnitude(centre, cal) == 0.0);
            if (mode == CalibrationMode::MeanSigma) {
                CHECK(ood_magnitude(cal.mean + 0.3, cal) == doctest::Approx(ood_magnitude(cal.mean - 0.3, cal)));
            }
            std::mt19937_64 rng(7);
            std::uniform_real_distribution<double> u(0.0, 3.0);
            for (int k = 0; k < 200; ++k) {
                const double a = u(rng), b = u(rng);
                if (a == b) continue;
                CHECK((ood_magnitude(centre + a, cal) < ood_magnitude(centre + b, cal)) == (a < b));
                CHECK((ood_magnitude(centre - a, cal) < ood_magnitude(centre - b, cal)) == (a < b));
            }
            // the threshold picture and the ranking picture agree
            const double edge = mode == CalibrationMode::MeanSigma ? cal.lambda : 1.0;
            for (int k = 0; k < 200; ++k) {
                const double v = centre + (u(rng) - 1.5) * 0.3;
                CHECK(is_in_distribution(v, cal) == (ood_magnitude(v, cal) <= edge));
            }
        }
    }

    TEST_CASE("detect") {
        const std::vector<double> s{0.9, 1.0, 1.1};
        const auto cal = calibrate(s, CalibrationMode::MeanSigma, 1.0);
        CHECK_FALSE(detect({cal.lower, -1, -1, 0}, cal).ood);
        CHECK_FALSE(detect({cal.upper, -1, -1, 0}, cal).ood);
        CHECK_FALSE(detect({cal.mean, -1, -1, 0}, cal).ood);
        CHECK(detect({cal.upper + 1e-6, -1, -1, 0}, cal).ood);
        CHECK(detect({cal.lower - 1e-6, -1, -1, 0}, cal).ood);
    }

    TEST_CASE("lambda monotonicity") {
        std::mt19937_64 rng(8);
        std::normal_distribution<double> g;
        std::vector<double> train(100), probe(300);
        for (auto& x : train) x = g(rng);
        for (auto& x : probe) x = 2.0 * g(rng);
        const auto base = calibrate(train, CalibrationMode::MeanSigma, 1.0);
        const auto grid = default_lambda_grid(CalibrationMode::MeanSigma);
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            const auto a = with_lambda(base, grid[i]);
            const auto b = with_lambda(base, grid[i + 1]);
            for (double v : probe) {
                if (is_in_distribution(v, a)) CHECK(is_in_distribution(v, b));
            }
        }
    }

    TEST_CASE("calibration file round trip") {
        const std::vector<double> s{0.3, 0.9, 1.0, 1.7};
        auto cal = calibrate(s, CalibrationMode::Quantile, 0.3, ScoreForm::LogDiff);
        cal.samples = 42;
        cal.seed = 99;
        cal.align_inputs = true;
        cal.model_x_hash = digest_hex("abc");
        cal.model_r_hash = digest_hex("def");
        const auto path = std::filesystem::temp_directory_path() / "srs_cal_roundtrip.txt";
        save_calibration(cal, path);
        const auto back = load_calibration(path);
        std::filesystem::remove(path);
        CHECK(back.mode == cal.mode);
        CHECK(back.form == cal.form);
        CHECK(back.mean == cal.mean);
        CHECK(back.sigma == cal.sigma);
        CHECK(back.lambda == cal.lambda);
        CHECK(back.lower == cal.lower);
        CHECK(back.upper == cal.upper);
        CHECK(back.train_scores == cal.train_scores);
        CHECK(back.samples == 42);
        CHECK(back.seed == 99);
        CHECK(back.align_inputs);
        CHECK(back.model_x_hash == cal.model_x_hash);
        CHECK(format_calibration(back) == format_calibration(cal));
        CHECK(digest_hex("abc").size() == 16);
        CHECK(digest_hex("") == "cbf29ce484222325");
        CHECK_THROWS_AS(parse_calibration("format=other\n"), ParseError);
    }

    TEST_CASE("nearest pattern classifier") {
        stl::ClassDecomposition dec;
        dec.header = {1, 4, 2};
        dec.patterns[0] = TimeSeries(1, 4, {0, 1, 0, -1});
        dec.patterns[1] = TimeSeries(1, 4, {5, 5, 5, 5});
        CHECK(nearest_pattern(TimeSeries(1, 4, {0.1, 0.9, 0.0, -1.2}), dec) == 0);
        CHECK(nearest_pattern(TimeSeries(1, 4, {4, 6, 5, 5}), dec) == 1);
    }
}
