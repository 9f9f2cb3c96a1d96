#include "srs/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "srs/errors.hpp"

namespace srs::eval {
namespace {

double channel_phase(std::size_t label, std::size_t channel, std::size_t channels) {
    return std::numbers::pi * (static_cast<double>(channel) / static_cast<double>(channels) +
                               0.25 * static_cast<double>(label));
}

TimeSeries wave(std::size_t n, std::size_t T, double freq, std::size_t label, double shift, bool square) {
    TimeSeries x(n, T);
    for (std::size_t c = 0; c < n; ++c) {
        const double phase = channel_phase(label, c, n);
        for (std::size_t t = 0; t < T; ++t) {
            const double arg =
                2.0 * std::numbers::pi * freq * (static_cast<double>(t) - shift) / static_cast<double>(T) + phase;
            const double v = std::sin(arg);
            x(c, t) = square ? (v >= 0.0 ? 1.0 : -1.0) : v;
        }
    }
    return x;
}

class Generator {
public:
    Generator(const SyntheticSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {}

    double shift() {
        if (spec_.max_shift == 0) return 0.0;
        const std::uint64_t span = 2 * spec_.max_shift + 1;
        return static_cast<double>(rng_() % span) - static_cast<double>(spec_.max_shift);
    }

    void add_noise(TimeSeries& x) {
        if (spec_.noise_sigma == 0.0) return;
        for (double& v : x.values()) v += spec_.noise_sigma * normal_(rng_);
    }

    LabeledDataset id_split(std::size_t per_class, Split split) {
        LabeledDataset ds;
        ds.header = {spec_.channels, spec_.length, spec_.classes};
        ds.split = split;
        // Interleave classes so serialization order is not class-sorted.
        for (std::size_t i = 0; i < per_class; ++i) {
            for (std::size_t c = 0; c < spec_.classes; ++c) {
                TimeSeries x = wave(spec_.channels, spec_.length, class_frequency(spec_, c), c, shift(), false);
                add_noise(x);
                ds.examples.push_back({std::move(x), c});
            }
        }
        return ds;
    }

    LabeledDataset ood_split() {
        LabeledDataset ds;
        ds.header = {spec_.channels, spec_.length, spec_.ood_frequencies};
        ds.split = Split::Test;
        const double first = spec_.base_frequency + static_cast<double>(spec_.classes) + spec_.ood_frequency_gap;
        for (std::size_t i = 0; i < spec_.ood_count; ++i) {
            const std::size_t k = i % spec_.ood_frequencies;
            TimeSeries x = wave(spec_.channels, spec_.length, first + static_cast<double>(k), k + spec_.classes,
                                shift(), spec_.ood_family == OodFamily::Square);
            add_noise(x);
            ds.examples.push_back({std::move(x), k});
        }
        return ds;
    }

private:
    const SyntheticSpec& spec_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace

void SyntheticSpec::validate() const {
    if (classes < 1) throw ConfigError("synthetic: need at least one class");
    if (channels < 1 || length < 2) throw ConfigError("synthetic: need n >= 1 and T >= 2");
    if (!(noise_sigma >= 0.0)) throw ConfigError("synthetic: noise sigma must be >= 0");
    if (ood_frequencies < 1) throw ConfigError("synthetic: need at least one OOD frequency");
    if (ood_frequency_gap < 0.0) throw ConfigError("synthetic: OOD frequency gap must be >= 0");
    if (train_per_class < 2) throw ConfigError("synthetic: need at least 2 training examples per class");
    if (2 * max_shift >= length) throw ConfigError("synthetic: max shift must be below half the length");
}

double class_frequency(const SyntheticSpec& spec, std::size_t label) noexcept {
    return spec.base_frequency + static_cast<double>(label);
}

TimeSeries synthetic_pattern(const SyntheticSpec& spec, std::size_t label) {
    return wave(spec.channels, spec.length, class_frequency(spec, label), label, 0.0, false);
}

SyntheticData make_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    Generator gen(spec, seed);
    SyntheticData d;
    d.train = gen.id_split(spec.train_per_class, Split::Train);
    d.val = gen.id_split(spec.val_per_class, Split::Validation);
    d.test = gen.id_split(spec.test_per_class, Split::Test);
    d.ood = gen.ood_split();
    return d;
}

}  // namespace srs::eval
