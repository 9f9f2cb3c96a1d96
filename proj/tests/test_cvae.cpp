#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "srs/cvae.hpp"
#include "srs/errors.hpp"
#include "toy_models.hpp"

using namespace srs;
using namespace srs::cvae;

namespace {

Architecture tiny_arch() {
    Architecture a;
    a.channels = 1;
    a.length = 4;
    a.classes = 2;
    a.conv_channels = {3, 4};
    a.latent_dim = 2;
    return a;
}

NormStats unit_norm(std::size_t n) {
    NormStats s;
    s.min.assign(n, 0.0);
    s.max.assign(n, 1.0);
    return s;
}

CvaeModel perturbed_tiny(std::uint64_t seed) {
    auto m = CvaeModel::initialize(tiny_arch(), unit_norm(1), seed);
    std::mt19937_64 rng(seed + 1);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (auto& p : m.parameters()) p += u(rng);
    return m;
}

std::vector<TrainingSample> two_class_set(std::size_t per_class, std::size_t T, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, sigma);
    std::vector<TrainingSample> out;
    for (std::size_t i = 0; i < per_class; ++i) {
        for (std::size_t y = 0; y < 2; ++y) {
            TimeSeries x(1, T);
            for (std::size_t t = 0; t < T; ++t) {
                const double ph = 2.0 * M_PI * static_cast<double>(t) / static_cast<double>(T);
                x(0, t) = (y == 0 ? std::sin(ph) : std::cos(3.0 * ph)) + g(rng);
            }
            out.push_back({x, y});
        }
    }
    return out;
}

}  // namespace

TEST_SUITE("cvae") {
    TEST_CASE("kl term") {
        GaussianPosterior prior{{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
        CHECK(kl_to_standard_normal(prior) == 0.0);
        std::mt19937_64 rng(1);
        std::normal_distribution<double> g;
        for (int k = 0; k < 100; ++k) {
            GaussianPosterior q{{g(rng), g(rng)}, {g(rng), g(rng)}};
            double ref = 0.0;
            for (std::size_t d = 0; d < 2; ++d) ref += 0.5 * (std::exp(q.log_var[d]) + q.mean[d] * q.mean[d] - 1.0 - q.log_var[d]);
            CHECK(kl_to_standard_normal(q) >= 0.0);
            CHECK(kl_to_standard_normal(q) == doctest::Approx(ref).epsilon(1e-12));
        }
    }

    TEST_CASE("elbo at prior posterior and exact decoder") {
        auto arch = tiny_arch();
        arch.decoder_sigma = 1.0;
        auto m = CvaeModel::initialize(arch, unit_norm(1), 3);
        for (auto& v : m.tensor("encoder.head.weight")) v = 0.0;
        for (auto& v : m.tensor("encoder.head.bias")) v = 0.0;
        for (auto& v : m.tensor("decoder.deconv1.weight")) v = 0.0;
        m.tensor("decoder.deconv1.bias")[0] = 0.25;
        const TimeSeries x(1, 4, {0.25, 0.25, 0.25, 0.25});
        const auto q = m.posterior(x, 1);
        CHECK(q.mean == std::vector<double>{0.0, 0.0});
        CHECK(q.log_var == std::vector<double>{0.0, 0.0});
        CHECK(kl_to_standard_normal(q) == 0.0);
        const std::vector<double> z{0.4, -1.2};
        const double expected = -0.5 * 4.0 * std::log(2.0 * M_PI);
        CHECK(m.log_likelihood(x, z, 1) == doctest::Approx(expected).epsilon(1e-14));
        CHECK(elbo(m, x, 1, z) == doctest::Approx(expected).epsilon(1e-14));
    }

    TEST_CASE("elbo equals term-by-term re-evaluation") {
        const auto m = perturbed_tiny(5);
        const TimeSeries x(1, 4, {0.1, 0.7, 0.4, 0.9});
        const std::vector<double> z{0.3, -0.6};
        const auto q = m.posterior(x, 0);
        const auto mean = m.decode_normalized(z, 0);
        const double s = m.architecture().decoder_sigma;
        double rec = 0.0;
        for (std::size_t t = 0; t < 4; ++t) {
            const double d = x(0, t) - mean(0, t);
            rec += -0.5 * std::log(2.0 * M_PI * s * s) - 0.5 * d * d / (s * s);
        }
        double kl = 0.0;
        for (std::size_t d = 0; d < 2; ++d) kl += 0.5 * (std::exp(q.log_var[d]) + q.mean[d] * q.mean[d] - 1.0 - q.log_var[d]);
        CHECK(elbo(m, x, 0, z) == doctest::Approx(rec - kl).epsilon(1e-12));

        // negative_elbo uses the reparameterized draw
        const std::vector<double> noise{0.5, -1.5};
        std::vector<double> zz(2);
        for (std::size_t d = 0; d < 2; ++d) zz[d] = q.mean[d] + std::exp(0.5 * q.log_var[d]) * noise[d];
        CHECK(negative_elbo(m, x, 0, noise) == doctest::Approx(-elbo(m, x, 0, zz)).epsilon(1e-12));
    }

    TEST_CASE("gradient matches central differences for every tensor") {
        auto m = perturbed_tiny(9);
        const TimeSeries x(1, 4, {0.2, 0.9, 0.5, 0.1});
        const std::vector<double> noise{0.7, -0.4};
        std::vector<double> grad;
        negative_elbo_gradient(m, x, 1, noise, grad);
        REQUIRE(grad.size() == m.parameters().size());
        for (const auto& t : m.tensors()) {
            CAPTURE(t.name);
            double worst = 0.0;
            for (std::size_t k = 0; k < t.size(); ++k) {
                const std::size_t i = t.offset + k;
                const double orig = m.parameters()[i];
                const double h = 1e-5;
                m.parameters()[i] = orig + h;
                const double up = negative_elbo(m, x, 1, noise);
                m.parameters()[i] = orig - h;
                const double dn = negative_elbo(m, x, 1, noise);
                m.parameters()[i] = orig;
                const double fd = (up - dn) / (2.0 * h);
                // relative error with an absolute floor for near-zero entries
                const double err = std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
                worst = std::max(worst, err);
            }
            CHECK(worst <= 1e-4);
        }
    }

    TEST_CASE("mc_log_likelihood with one sample is the single-draw integrand") {
        const auto m = perturbed_tiny(13);
        const TimeSeries x(1, 4, {0.3, 0.5, 0.2, 0.8});
        const auto q = m.posterior(x, 0);
        std::mt19937_64 rng(77);
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<double> z(2);
        for (std::size_t d = 0; d < 2; ++d) z[d] = q.mean[d] + std::exp(0.5 * q.log_var[d]) * g(rng);
        const double integrand = m.log_likelihood(x, z, 0) + log_normal_density(z, {}, {}) -
                                 log_normal_density(z, q.mean, q.log_var);
        CHECK(mc_log_likelihood(m, x, 0, 1, 77) == doctest::Approx(integrand).epsilon(1e-12));
        CHECK_THROWS_AS(mc_log_likelihood(m, x, 0, 0, 1), ValidationError);
    }

    TEST_CASE("linear-Gaussian toy: estimate converges to the exact marginal") {
        const auto model = toy::standard_toy();
        const TimeSeries x(1, 4, {0.5, -0.3, 0.9, 0.2});
        const double exact = model.exact_log_marginal(x);
        CHECK(std::abs(mc_log_likelihood(model, x, 0, 10000, 1) - exact) <= 0.05);
    }

    TEST_CASE("importance-weighted bound tightens with more samples") {
        const auto model = toy::LinearGaussian({{1.0, 0.3}, {-0.5, 0.8}, {0.2, -1.1}, {0.7, 0.4}},
                                               {0.1, -0.2, 0.3, 0.0}, 0.5, 3.0);
        const TimeSeries x(1, 4, {0.5, -0.3, 0.9, 0.2});
        std::vector<double> a, b;
        for (std::uint64_t s = 0; s < 200; ++s) {
            a.push_back(mc_log_likelihood(model, x, 0, 1, s));
            b.push_back(mc_log_likelihood(model, x, 0, 50, s + 1000));
        }
        const double se = oracle::population_sd(b) / std::sqrt(200.0);
        CHECK(oracle::mean(a) <= oracle::mean(b) + 3.0 * se);
        CHECK(oracle::mean(a) <= model.exact_log_marginal(x));
    }

    TEST_CASE("training is deterministic and learns a constant target") {
        std::vector<TrainingSample> data;
        TimeSeries x(1, 16);
        for (std::size_t t = 0; t < 16; ++t) x(0, t) = std::sin(0.4 * static_cast<double>(t));
        for (int k = 0; k < 192; ++k) data.push_back({x, 0});
        Architecture arch;
        arch.length = 16;
        arch.conv_channels = {4, 8};
        arch.latent_dim = 2;
        TrainConfig cfg;
        cfg.iterations = 500;
        TrainReport rep;
        const auto m1 = train(data, arch, cfg, &rep);
        const auto m2 = train(data, arch, cfg);
        CHECK(std::equal(m1.parameters().begin(), m1.parameters().end(), m2.parameters().begin(), m2.parameters().end()));
        CHECK(m1.train_mae <= 0.05);
        CHECK(m1.train_mae == doctest::Approx(reconstruction_mae(m1, data)).epsilon(1e-12));
        CHECK(rep.epoch_loss.size() == 500);
        for (double p : m1.parameters()) CHECK(std::isfinite(p));
        cfg.seed = 8;
        const auto m3 = train(data, arch, cfg);
        CHECK_FALSE(std::equal(m1.parameters().begin(), m1.parameters().end(), m3.parameters().begin()));
    }

    TEST_CASE("conditioning on the label matters") {
        const auto data = two_class_set(30, 24, 0.05, 4);
        Architecture arch;
        arch.length = 24;
        arch.classes = 2;
        arch.conv_channels = {8, 16};
        arch.latent_dim = 4;
        TrainConfig cfg;
        cfg.iterations = 300;
        const auto m = train(data, arch, cfg);
        std::size_t right = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto y = data[i].label;
            if (mc_log_likelihood(m, data[i].series, y, 20, i) > mc_log_likelihood(m, data[i].series, 1 - y, 20, i)) ++right;
        }
        CHECK(static_cast<double>(right) >= 0.9 * static_cast<double>(data.size()));
    }

    TEST_CASE("save/load round trip") {
        const auto data = two_class_set(4, 8, 0.1, 6);
        Architecture arch;
        arch.length = 8;
        arch.classes = 2;
        arch.conv_channels = {2, 3};
        arch.latent_dim = 2;
        TrainConfig cfg;
        cfg.iterations = 5;
        const auto m = train(data, arch, cfg);
        const auto path = std::filesystem::temp_directory_path() / "srs_model_roundtrip.bin";
        save_model(m, path);
        const auto back = load_model(path);
        std::filesystem::remove(path);
        CHECK(back.architecture() == m.architecture());
        CHECK(back.norm() == m.norm());
        CHECK(back.train_config == m.train_config);
        CHECK(std::equal(m.parameters().begin(), m.parameters().end(), back.parameters().begin(), back.parameters().end()));
        const auto& x = data[0].series;
        CHECK(mc_log_likelihood(back, x, 0, 10, 3) == mc_log_likelihood(m, x, 0, 10, 3));
        CHECK(reconstruction_mae(back, data) == m.train_mae);
        CHECK(serialize_model(back) == serialize_model(m));

        const auto bytes = serialize_model(m);
        CHECK_THROWS_AS(deserialize_model(bytes.substr(0, bytes.size() - 9)), ParseError);
        CHECK_THROWS_AS(deserialize_model(bytes.substr(0, 10)), ParseError);
        auto flipped = bytes;
        flipped[bytes.size() / 2] ^= 0x1;
        CHECK_THROWS_AS(deserialize_model(flipped), ParseError);
        auto wrong_version = bytes;
        wrong_version[8] = 9;
        CHECK_THROWS_AS(deserialize_model(wrong_version), ParseError);
        CHECK_THROWS_AS(load_model("/nonexistent/model.bin"), IoError);
    }

    TEST_CASE("configuration errors") {
        Architecture a;
        a.latent_dim = 0;
        CHECK_THROWS_AS(a.validate(), ConfigError);
        TrainConfig t;
        t.learning_rate = 0.0;
        CHECK_THROWS_AS(t.validate(), ConfigError);
        CHECK_THROWS(train(std::span<const TrainingSample>{}, Architecture{}, TrainConfig{}));
    }
}
