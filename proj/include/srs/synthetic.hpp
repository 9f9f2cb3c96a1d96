#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "srs/dataset.hpp"

namespace srs::eval {

enum class OodFamily { Sinusoid, Square };

/// Sinusoidal benchmark: ID class c has frequency base_frequency + c cycles
/// per window on every channel with a per-channel phase offset, amplitude 1
/// and iid Gaussian noise. OOD examples use frequencies starting at
/// base_frequency + classes + ood_frequency_gap, all disjoint from ID.
struct SyntheticSpec {
    std::size_t channels = 2;
    std::size_t length = 64;
    std::size_t classes = 3;
    std::size_t train_per_class = 60;
    std::size_t val_per_class = 20;
    std::size_t test_per_class = 20;
    std::size_t ood_count = 60;
    std::size_t ood_frequencies = 3;
    double base_frequency = 1.0;
    double ood_frequency_gap = 1.0;
    double noise_sigma = 0.05;
    /// Uniform integer time shift in [-max_shift, max_shift] per example.
    std::size_t max_shift = 0;
    OodFamily ood_family = OodFamily::Sinusoid;

    void validate() const;
};

struct SyntheticData {
    LabeledDataset train;
    LabeledDataset val;
    LabeledDataset test;
    /// OOD examples labelled by OOD frequency index (header C = ood_frequencies).
    LabeledDataset ood;
};

SyntheticData make_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Noise-free, unshifted pattern of ID class `label`.
TimeSeries synthetic_pattern(const SyntheticSpec& spec, std::size_t label);

double class_frequency(const SyntheticSpec& spec, std::size_t label) noexcept;

}  // namespace srs::eval
