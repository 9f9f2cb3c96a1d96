#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "srs/errors.hpp"
#include "srs/stl.hpp"
#include "srs/synthetic.hpp"

using namespace srs;
using namespace srs::eval;

TEST_SUITE("synthetic") {
    TEST_CASE("sizes and headers") {
        SyntheticSpec sp;
        const auto d = make_synthetic(sp, 7);
        CHECK(d.train.size() == 180);
        CHECK(d.val.size() == 60);
        CHECK(d.test.size() == 60);
        CHECK(d.ood.size() == 60);
        CHECK(d.train.header == DatasetHeader{2, 64, 3});
        CHECK(d.ood.header.classes == sp.ood_frequencies);
        CHECK_NOTHROW(d.train.validate());
    }

    TEST_CASE("deterministic per seed") {
        SyntheticSpec sp;
        sp.max_shift = 4;
        const auto a = make_synthetic(sp, 3);
        const auto b = make_synthetic(sp, 3);
        const auto c = make_synthetic(sp, 4);
        REQUIRE(a.train.size() == b.train.size());
        bool differs = false;
        for (std::size_t i = 0; i < a.train.size(); ++i) {
            CHECK(a.train.examples[i].series == b.train.examples[i].series);
            differs = differs || !(a.train.examples[i].series == c.train.examples[i].series);
        }
        CHECK(differs);
    }

    TEST_CASE("noise-free classes are identical and recovered exactly") {
        SyntheticSpec sp;
        sp.noise_sigma = 0.0;
        sp.train_per_class = 4;
        const auto d = make_synthetic(sp, 1);
        const auto dec = stl::class_patterns(d.train);
        for (const auto& ex : d.train.examples) {
            CHECK(ex.series == synthetic_pattern(sp, ex.label));
            const auto& s = dec.pattern(ex.label);
            for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(s.values()[i] - ex.series.values()[i]) <= 1e-6);
        }
    }

    TEST_CASE("dominant frequency of each class") {
        SyntheticSpec sp;
        const auto d = make_synthetic(sp, 2);
        for (const auto& ex : d.test.examples) {
            for (std::size_t c = 0; c < sp.channels; ++c) {
                const auto ch = ex.series.channel(c);
                CHECK(static_cast<double>(oracle::dominant_bin({ch.begin(), ch.end()})) == class_frequency(sp, ex.label));
            }
        }
        // OOD frequencies are disjoint from every ID frequency
        for (const auto& ex : d.ood.examples) {
            const auto ch = ex.series.channel(0);
            const auto bin = static_cast<double>(oracle::dominant_bin({ch.begin(), ch.end()}));
            for (std::size_t y = 0; y < sp.classes; ++y) CHECK(bin != class_frequency(sp, y));
        }
    }

    TEST_CASE("square-wave OOD family") {
        SyntheticSpec sp;
        sp.ood_family = OodFamily::Square;
        sp.noise_sigma = 0.0;
        const auto d = make_synthetic(sp, 2);
        for (double v : d.ood.examples[0].series.values()) CHECK(std::abs(std::abs(v) - 1.0) <= 1e-12);
    }

    TEST_CASE("invalid specs") {
        SyntheticSpec sp;
        sp.noise_sigma = -1.0;
        CHECK_THROWS_AS(make_synthetic(sp, 1), ConfigError);
        sp = {};
        sp.classes = 0;
        CHECK_THROWS_AS(make_synthetic(sp, 1), ConfigError);
    }
}
