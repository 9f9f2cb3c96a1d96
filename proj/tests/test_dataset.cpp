#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "srs/dataset.hpp"
#include "srs/errors.hpp"

using namespace srs;

namespace {

LabeledDataset random_dataset(std::size_t n, std::size_t T, std::size_t C, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 3.0);
    LabeledDataset ds;
    ds.header = {n, T, C};
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<double> v(n * T);
        for (auto& x : v) x = g(rng);
        ds.examples.push_back({TimeSeries(n, T, v), i % C});
    }
    return ds;
}

}  // namespace

TEST_SUITE("dataset") {
    TEST_CASE("parse a small file") {
        const auto ds = io::parse_dataset("1 4 2\n0\n1 2 3 4\n\n1\n5 6 7 8\n", Split::Train);
        REQUIRE(ds.size() == 2);
        CHECK(ds.header == DatasetHeader{1, 4, 2});
        CHECK(ds.examples[1].label == 1);
        CHECK(ds.examples[1].series(0, 2) == 7.0);
    }

    TEST_CASE("malformed inputs are rejected") {
        CHECK_THROWS_AS(io::parse_dataset("1 4 2\n0\n1 2 3\n", Split::Train), ValidationError);
        CHECK_THROWS_AS(io::parse_dataset("1 4 2\n2\n1 2 3 4\n", Split::Test), ValidationError);
        CHECK_THROWS_AS(io::parse_dataset("1 4 2\n0\n1 2 nan 4\n", Split::Test), Error);
        CHECK_THROWS_AS(io::parse_dataset("1 4\n", Split::Test), ParseError);
        CHECK_THROWS_AS(io::parse_dataset("1 4 2\n0\n1 2 x 4\n", Split::Test), ParseError);
        // train split must contain every class
        CHECK_THROWS_AS(io::parse_dataset("1 4 2\n0\n1 2 3 4\n", Split::Train), ValidationError);
        CHECK_NOTHROW(io::parse_dataset("1 4 2\n0\n1 2 3 4\n", Split::Test));
        CHECK_THROWS_AS(TimeSeries(1, 2, {1.0}), ShapeError);
    }

    TEST_CASE("header-only dataset") {
        LabeledDataset ds;
        ds.header = {2, 3, 1};
        ds.split = Split::Test;
        CHECK(io::format_dataset(ds) == "2 3 1\n");
        CHECK(io::parse_dataset(io::format_dataset(ds), Split::Test).empty());
    }

    TEST_CASE("save/load round trip") {
        const auto ds = random_dataset(3, 8, 2, 100, 11);
        const auto path = std::filesystem::temp_directory_path() / "srs_dataset_roundtrip.txt";
        io::save_dataset(ds, path);
        const auto back = io::load_dataset(path, Split::Train);
        std::filesystem::remove(path);
        REQUIRE(back.size() == ds.size());
        CHECK(back.header == ds.header);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            CHECK(back.examples[i].label == ds.examples[i].label);
            // bit-exact, stronger than the 1e-9 text tolerance
            CHECK(back.examples[i].series == ds.examples[i].series);
        }
    }

    TEST_CASE("norm stats") {
        LabeledDataset ds;
        ds.header = {2, 2, 1};
        ds.examples.push_back({TimeSeries::from_rows({{0, 1}, {2, 4}}), 0});
        const auto st = io::fit_norm_stats(ds);
        CHECK(st.min == std::vector<double>{0, 2});
        CHECK(st.max == std::vector<double>{1, 4});

        const auto rnd = random_dataset(2, 5, 1, 3, 5);
        const auto s2 = io::fit_norm_stats(rnd);
        for (std::size_t c = 0; c < 2; ++c) {
            double lo = 1e300, hi = -1e300;
            for (const auto& ex : rnd.examples) {
                for (std::size_t t = 0; t < 5; ++t) {
                    lo = std::min(lo, ex.series(c, t));
                    hi = std::max(hi, ex.series(c, t));
                }
            }
            CHECK(s2.min[c] == lo);
            CHECK(s2.max[c] == hi);
        }

        LabeledDataset flat;
        flat.header = {1, 3, 1};
        flat.examples.push_back({TimeSeries(1, 3, {2, 2, 2}), 0});
        const auto sf = io::fit_norm_stats(flat);
        CHECK(sf.is_constant(0));
        const auto z = io::normalize(flat.examples[0].series, sf);
        for (double v : z.values()) CHECK(v == 0.0);

        CHECK_THROWS_AS(io::fit_norm_stats(LabeledDataset{}), ValidationError);
    }

    TEST_CASE("normalize maps min/max to 0/1 and round trips") {
        const auto ds = random_dataset(2, 16, 1, 10, 9);
        const auto st = io::fit_norm_stats(ds);
        TimeSeries lo(2, 4), hi(2, 4);
        for (std::size_t c = 0; c < 2; ++c) {
            for (std::size_t t = 0; t < 4; ++t) {
                lo(c, t) = st.min[c];
                hi(c, t) = st.max[c];
            }
        }
        const auto nlo = io::normalize(lo, st);
        const auto nhi = io::normalize(hi, st);
        for (double v : nlo.values()) CHECK(v == 0.0);
        for (double v : nhi.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
        for (const auto& ex : ds.examples) {
            const auto back = io::denormalize(io::normalize(ex.series, st), st);
            for (std::size_t i = 0; i < back.size(); ++i) CHECK(std::abs(back.values()[i] - ex.series.values()[i]) <= 1e-12);
        }
        // values outside the training range are not clipped
        TimeSeries out(2, 1, {st.max[0] + 10.0, st.min[1] - 10.0});
        const auto n = io::normalize(out, st);
        CHECK(n(0, 0) > 1.0);
        CHECK(n(1, 0) < 0.0);
        CHECK_THROWS_AS(io::normalize(TimeSeries(3, 2), st), ShapeError);
    }

    TEST_CASE("reconcile_dims") {
        const auto x = TimeSeries::from_rows({{1, 2, 3, 4, 5}, {6, 7, 8, 9, 10}});
        CHECK(io::reconcile_dims(x, 2, 5) == x);
        CHECK(io::reconcile_dims(TimeSeries::from_rows({{1, 2, 3}}), 2, 4) ==
              TimeSeries::from_rows({{1, 2, 3, 0}, {0, 0, 0, 0}}));
        const auto big = TimeSeries::from_rows({{1, 2, 3, 4, 5, 6, 7, 8}, {9, 10, 11, 12, 13, 14, 15, 16},
                                                 {17, 18, 19, 20, 21, 22, 23, 24}});
        const auto cut = io::reconcile_dims(big, 2, 5);
        REQUIRE(cut.channels() == 2);
        REQUIRE(cut.length() == 5);
        for (std::size_t c = 0; c < 2; ++c) {
            for (std::size_t t = 0; t < 5; ++t) CHECK(cut(c, t) == big(c, t));
        }
        std::mt19937_64 rng(1);
        for (int k = 0; k < 50; ++k) {
            const std::size_t n = 1 + rng() % 4, T = 2 + rng() % 9;
            const auto r = random_dataset(n, T, 1, 1, rng()).examples[0].series;
            const std::size_t tn = 1 + rng() % 4, tt = 2 + rng() % 9;
            const auto once = io::reconcile_dims(r, tn, tt);
            CHECK(io::reconcile_dims(once, tn, tt) == once);
        }
    }

    TEST_CASE("group_by_class") {
        LabeledDataset ds;
        ds.header = {1, 2, 2};
        ds.examples = {{TimeSeries(1, 2, {1, 1}), 0}, {TimeSeries(1, 2, {2, 2}), 1}, {TimeSeries(1, 2, {3, 3}), 0}};
        const auto g = io::group_by_class(ds);
        REQUIRE(g.at(0).size() == 2);
        CHECK(g.at(0)[0](0, 0) == 1.0);
        CHECK(g.at(0)[1](0, 0) == 3.0);
        CHECK(g.at(1).size() == 1);

        std::mt19937_64 rng(2);
        LabeledDataset r;
        r.header = {1, 2, 5};
        std::vector<std::size_t> hist(5, 0);
        for (int i = 0; i < 200; ++i) {
            const std::size_t y = rng() % 5;
            ++hist[y];
            r.examples.push_back({TimeSeries(1, 2), y});
        }
        const auto gr = io::group_by_class(r);
        std::size_t total = 0;
        for (const auto& [y, xs] : gr) {
            CHECK(xs.size() == hist[y]);
            total += xs.size();
        }
        CHECK(total == r.size());
    }

    TEST_CASE("split names") {
        CHECK(parse_split("val") == Split::Validation);
        CHECK(parse_split("train") == Split::Train);
        CHECK_THROWS(parse_split("bogus"));
    }
}
