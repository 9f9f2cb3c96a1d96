#pragma once

// Forward/backward passes of the conditional VAE over a flat parameter
// vector. Activations are position-major: element (p, c) of a layer with C
// channels lives at [p * C + c].

#include <cstddef>
#include <span>
#include <vector>

#include "srs/cvae.hpp"

namespace srs::cvae::detail {

inline constexpr std::size_t kKernel = 3;

struct ConvLayout {
    std::size_t weight = 0;  // conv: [cout][k][cin]; transposed: [k][cout][cin]
    std::size_t bias = 0;
    std::size_t cin = 0;
    std::size_t cout = 0;
    std::size_t lin = 0;
    std::size_t lout = 0;
};

struct DenseLayout {
    std::size_t weight = 0;  // [out][in]
    std::size_t bias = 0;
    std::size_t in = 0;
    std::size_t out = 0;
};

struct Layout {
    std::vector<ConvLayout> encoder;
    DenseLayout head;
    DenseLayout expand;
    std::vector<ConvLayout> decoder;
    std::size_t latent = 0;
    std::size_t classes = 0;
    std::size_t channels = 0;
    std::size_t length = 0;
    std::size_t flat = 0;
    std::size_t total = 0;
};

Layout make_layout(const Architecture& arch, std::vector<TensorInfo>* tensors = nullptr);

struct Workspace {
    std::vector<double> input;                 // [T][n + C]
    std::size_t label = 0;
    std::vector<std::vector<double>> enc_col;  // im2col per encoder layer
    std::vector<std::vector<double>> enc_pre;
    std::vector<std::vector<double>> enc_act;
    std::vector<double> head;                  // [mean | raw log-var]
    std::vector<double> mean, log_var, noise, z;
    std::vector<double> dec_in;                // [z | one-hot]
    std::vector<double> exp_pre, exp_act;
    std::vector<std::vector<double>> dec_pre;  // per transposed conv
    std::vector<std::vector<double>> dec_act;  // ELU output (unused for the last layer)
    std::vector<double> target;                // normalized x, position-major [T][n]

    // Backward scratch.
    std::vector<double> g_a, g_b, g_col;
};

class Network {
public:
    explicit Network(const Architecture& arch);

    const Layout& layout() const noexcept { return layout_; }

    /// Fills ws.input / ws.target from a normalized channel-major series.
    void load_input(const TimeSeries& x_normalized, std::size_t label, Workspace& ws) const;

    void encode(std::span<const double> params, Workspace& ws) const;

    /// Decoder mean (position-major [T][n]) for latent `z`; returns a view into ws.
    std::span<const double> decode(std::span<const double> params, std::span<const double> z, std::size_t label,
                                   Workspace& ws) const;

    /// Gaussian log-density of ws.target under mean `m` (position-major).
    double log_likelihood(std::span<const double> m, std::span<const double> target) const;

    /// Full forward pass of the negative ELBO with z = mean + sigma * noise.
    double loss(std::span<const double> params, std::span<const double> noise, Workspace& ws) const;

    /// Accumulates d(loss)/d(params) into `grad` using the state left by loss().
    void backward(std::span<const double> params, Workspace& ws, std::span<double> grad) const;

private:
    Architecture arch_;
    Layout layout_;
};

}  // namespace srs::cvae::detail
