#include <algorithm>
#include <cmath>
#include <numbers>

#include "cvae_net.hpp"
#include "srs/errors.hpp"
#include "srs/simd/kernels.hpp"

namespace srs::cvae::detail {
namespace {

constexpr double kLogVarMin = -10.0;
constexpr double kLogVarMax = 10.0;

inline double elu(double a) noexcept { return a > 0.0 ? a : std::expm1(a); }
inline double elu_grad(double a) noexcept { return a > 0.0 ? 1.0 : std::exp(a); }

void im2col(const double* in, std::size_t lin, std::size_t cin, std::size_t lout, double* col) {
    const std::size_t row = kKernel * cin;
    for (std::size_t p = 0; p < lout; ++p) {
        for (std::size_t k = 0; k < kKernel; ++k) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(2 * p + k) - 1;
            double* dst = col + p * row + k * cin;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(lin)) {
                std::fill_n(dst, cin, 0.0);
            } else {
                std::copy_n(in + static_cast<std::size_t>(src) * cin, cin, dst);
            }
        }
    }
}

void conv_forward(const ConvLayout& l, const double* params, const double* in, double* col, double* out) {
    const auto& k = simd::active();
    im2col(in, l.lin, l.cin, l.lout, col);
    const std::size_t row = kKernel * l.cin;
    const double* w = params + l.weight;
    const double* b = params + l.bias;
    for (std::size_t p = 0; p < l.lout; ++p) {
        for (std::size_t o = 0; o < l.cout; ++o) out[p * l.cout + o] = b[o] + k.dot(w + o * row, col + p * row, row);
    }
}

// gout: [lout][cout]. Writes d/d(input) into gin when non-null.
void conv_backward(const ConvLayout& l, const double* params, const double* col, const double* gout, double* grad,
                   double* gcol, double* gin) {
    const auto& k = simd::active();
    const std::size_t row = kKernel * l.cin;
    const double* w = params + l.weight;
    double* gw = grad + l.weight;
    double* gb = grad + l.bias;
    if (gin) std::fill_n(gcol, l.lout * row, 0.0);
    for (std::size_t p = 0; p < l.lout; ++p) {
        for (std::size_t o = 0; o < l.cout; ++o) {
            const double g = gout[p * l.cout + o];
            gb[o] += g;
            k.axpy(g, col + p * row, gw + o * row, row);
            if (gin) k.axpy(g, w + o * row, gcol + p * row, row);
        }
    }
    if (!gin) return;
    std::fill_n(gin, l.lin * l.cin, 0.0);
    for (std::size_t p = 0; p < l.lout; ++p) {
        for (std::size_t kk = 0; kk < kKernel; ++kk) {
            const std::ptrdiff_t dst = static_cast<std::ptrdiff_t>(2 * p + kk) - 1;
            if (dst < 0 || dst >= static_cast<std::ptrdiff_t>(l.lin)) continue;
            k.axpy(1.0, gcol + p * row + kk * l.cin, gin + static_cast<std::size_t>(dst) * l.cin, l.cin);
        }
    }
}

void deconv_forward(const ConvLayout& l, const double* params, const double* in, double* out) {
    const auto& k = simd::active();
    const double* w = params + l.weight;
    const double* b = params + l.bias;
    for (std::size_t q = 0; q < l.lout; ++q) std::copy_n(b, l.cout, out + q * l.cout);
    for (std::size_t p = 0; p < l.lin; ++p) {
        for (std::size_t kk = 0; kk < kKernel; ++kk) {
            const std::ptrdiff_t q = static_cast<std::ptrdiff_t>(2 * p + kk) - 1;
            if (q < 0 || q >= static_cast<std::ptrdiff_t>(l.lout)) continue;
            double* dst = out + static_cast<std::size_t>(q) * l.cout;
            const double* wk = w + kk * l.cout * l.cin;
            for (std::size_t o = 0; o < l.cout; ++o) dst[o] += k.dot(wk + o * l.cin, in + p * l.cin, l.cin);
        }
    }
}

void deconv_backward(const ConvLayout& l, const double* params, const double* in, const double* gout, double* grad,
                     double* gin) {
    const auto& k = simd::active();
    const double* w = params + l.weight;
    double* gw = grad + l.weight;
    double* gb = grad + l.bias;
    for (std::size_t q = 0; q < l.lout; ++q) {
        for (std::size_t o = 0; o < l.cout; ++o) gb[o] += gout[q * l.cout + o];
    }
    if (gin) std::fill_n(gin, l.lin * l.cin, 0.0);
    for (std::size_t p = 0; p < l.lin; ++p) {
        for (std::size_t kk = 0; kk < kKernel; ++kk) {
            const std::ptrdiff_t q = static_cast<std::ptrdiff_t>(2 * p + kk) - 1;
            if (q < 0 || q >= static_cast<std::ptrdiff_t>(l.lout)) continue;
            const double* g = gout + static_cast<std::size_t>(q) * l.cout;
            const std::size_t woff = kk * l.cout * l.cin;
            for (std::size_t o = 0; o < l.cout; ++o) {
                k.axpy(g[o], in + p * l.cin, gw + woff + o * l.cin, l.cin);
                if (gin) k.axpy(g[o], w + woff + o * l.cin, gin + p * l.cin, l.cin);
            }
        }
    }
}

void dense_forward(const DenseLayout& l, const double* params, const double* in, double* out) {
    const auto& k = simd::active();
    const double* w = params + l.weight;
    const double* b = params + l.bias;
    for (std::size_t j = 0; j < l.out; ++j) out[j] = b[j] + k.dot(w + j * l.in, in, l.in);
}

void dense_backward(const DenseLayout& l, const double* params, const double* in, const double* gout, double* grad,
                    double* gin) {
    const auto& k = simd::active();
    const double* w = params + l.weight;
    double* gw = grad + l.weight;
    double* gb = grad + l.bias;
    if (gin) std::fill_n(gin, l.in, 0.0);
    for (std::size_t j = 0; j < l.out; ++j) {
        gb[j] += gout[j];
        k.axpy(gout[j], in, gw + j * l.in, l.in);
        if (gin) k.axpy(gout[j], w + j * l.in, gin, l.in);
    }
}

void apply_elu(const std::vector<double>& pre, std::vector<double>& act) {
    act.resize(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) act[i] = elu(pre[i]);
}

// g *= elu'(pre), in place.
void elu_backward(const std::vector<double>& pre, std::vector<double>& g) {
    for (std::size_t i = 0; i < pre.size(); ++i) g[i] *= elu_grad(pre[i]);
}

}  // namespace

Layout make_layout(const Architecture& arch, std::vector<TensorInfo>* tensors) {
    arch.validate();
    Layout l;
    l.latent = arch.latent_dim;
    l.classes = arch.classes;
    l.channels = arch.channels;
    l.length = arch.length;
    std::size_t off = 0;
    auto add = [&](std::string name, std::vector<std::size_t> shape) {
        std::size_t size = 1;
        for (auto s : shape) size *= s;
        const std::size_t at = off;
        off += size;
        if (tensors) tensors->push_back({std::move(name), at, std::move(shape)});
        return at;
    };

    std::vector<std::size_t> lens{arch.length};
    std::vector<std::size_t> chans{arch.channels + arch.classes};
    for (std::size_t i = 0; i < arch.conv_channels.size(); ++i) {
        ConvLayout c;
        c.cin = chans.back();
        c.cout = arch.conv_channels[i];
        c.lin = lens.back();
        c.lout = (c.lin - 1) / 2 + 1;
        c.weight = add("encoder.conv" + std::to_string(i) + ".weight", {c.cout, kKernel, c.cin});
        c.bias = add("encoder.conv" + std::to_string(i) + ".bias", {c.cout});
        l.encoder.push_back(c);
        lens.push_back(c.lout);
        chans.push_back(c.cout);
    }
    l.flat = lens.back() * chans.back();
    l.head.in = l.flat;
    l.head.out = 2 * arch.latent_dim;
    l.head.weight = add("encoder.head.weight", {l.head.out, l.head.in});
    l.head.bias = add("encoder.head.bias", {l.head.out});

    l.expand.in = arch.latent_dim + arch.classes;
    l.expand.out = l.flat;
    l.expand.weight = add("decoder.expand.weight", {l.expand.out, l.expand.in});
    l.expand.bias = add("decoder.expand.bias", {l.expand.out});

    // Mirror of the encoder; the last layer maps to the signal channels.
    for (std::size_t i = arch.conv_channels.size(); i-- > 0;) {
        ConvLayout c;
        c.cin = chans[i + 1];
        c.cout = i == 0 ? arch.channels : chans[i];
        c.lin = lens[i + 1];
        c.lout = lens[i];
        const std::size_t idx = arch.conv_channels.size() - 1 - i;
        c.weight = add("decoder.deconv" + std::to_string(idx) + ".weight", {kKernel, c.cout, c.cin});
        c.bias = add("decoder.deconv" + std::to_string(idx) + ".bias", {c.cout});
        l.decoder.push_back(c);
    }
    l.total = off;
    return l;
}

Network::Network(const Architecture& arch) : arch_(arch), layout_(make_layout(arch)) {}

void Network::load_input(const TimeSeries& x, std::size_t label, Workspace& ws) const {
    const std::size_t n = layout_.channels;
    const std::size_t T = layout_.length;
    const std::size_t C = layout_.classes;
    if (x.channels() != n || x.length() != T) throw ShapeError("cvae: input does not match model shape");
    if (label >= C) throw ValidationError("cvae: label " + std::to_string(label) + " out of range");
    const std::size_t width = n + C;
    ws.input.assign(T * width, 0.0);
    ws.target.resize(T * n);
    for (std::size_t c = 0; c < n; ++c) {
        auto ch = x.channel(c);
        for (std::size_t t = 0; t < T; ++t) {
            ws.input[t * width + c] = ch[t];
            ws.target[t * n + c] = ch[t];
        }
    }
    for (std::size_t t = 0; t < T; ++t) ws.input[t * width + n + label] = 1.0;
    ws.label = label;
}

void Network::encode(std::span<const double> params, Workspace& ws) const {
    const std::size_t layers = layout_.encoder.size();
    ws.enc_col.resize(layers);
    ws.enc_pre.resize(layers);
    ws.enc_act.resize(layers);
    const double* in = ws.input.data();
    for (std::size_t i = 0; i < layers; ++i) {
        const auto& l = layout_.encoder[i];
        ws.enc_col[i].resize(l.lout * kKernel * l.cin);
        ws.enc_pre[i].resize(l.lout * l.cout);
        conv_forward(l, params.data(), in, ws.enc_col[i].data(), ws.enc_pre[i].data());
        apply_elu(ws.enc_pre[i], ws.enc_act[i]);
        in = ws.enc_act[i].data();
    }
    ws.head.resize(layout_.head.out);
    dense_forward(layout_.head, params.data(), in, ws.head.data());
    const std::size_t D = layout_.latent;
    ws.mean.assign(ws.head.begin(), ws.head.begin() + static_cast<std::ptrdiff_t>(D));
    ws.log_var.resize(D);
    for (std::size_t d = 0; d < D; ++d) ws.log_var[d] = std::clamp(ws.head[D + d], kLogVarMin, kLogVarMax);
}

std::span<const double> Network::decode(std::span<const double> params, std::span<const double> z, std::size_t label,
                                        Workspace& ws) const {
    const std::size_t D = layout_.latent;
    ws.dec_in.assign(D + layout_.classes, 0.0);
    std::copy_n(z.begin(), D, ws.dec_in.begin());
    ws.dec_in[D + label] = 1.0;
    ws.exp_pre.resize(layout_.expand.out);
    dense_forward(layout_.expand, params.data(), ws.dec_in.data(), ws.exp_pre.data());
    apply_elu(ws.exp_pre, ws.exp_act);
    const std::size_t layers = layout_.decoder.size();
    ws.dec_pre.resize(layers);
    ws.dec_act.resize(layers);
    const double* in = ws.exp_act.data();
    for (std::size_t i = 0; i < layers; ++i) {
        const auto& l = layout_.decoder[i];
        ws.dec_pre[i].resize(l.lout * l.cout);
        deconv_forward(l, params.data(), in, ws.dec_pre[i].data());
        if (i + 1 < layers) {
            apply_elu(ws.dec_pre[i], ws.dec_act[i]);
            in = ws.dec_act[i].data();
        }
    }
    if (layers == 0) return ws.exp_pre;
    return ws.dec_pre.back();
}

double Network::log_likelihood(std::span<const double> m, std::span<const double> target) const {
    const double sigma = arch_.decoder_sigma;
    const double inv_var = 1.0 / (sigma * sigma);
    double sq = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double d = target[i] - m[i];
        sq += d * d;
    }
    const double per_elem = std::log(sigma) + 0.5 * std::log(2.0 * std::numbers::pi);
    return -0.5 * sq * inv_var - per_elem * static_cast<double>(target.size());
}

double Network::loss(std::span<const double> params, std::span<const double> noise, Workspace& ws) const {
    encode(params, ws);
    const std::size_t D = layout_.latent;
    ws.noise.assign(noise.begin(), noise.begin() + static_cast<std::ptrdiff_t>(D));
    ws.z.resize(D);
    double kl = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
        ws.z[d] = ws.mean[d] + std::exp(0.5 * ws.log_var[d]) * ws.noise[d];
        kl += 0.5 * (std::exp(ws.log_var[d]) + ws.mean[d] * ws.mean[d] - 1.0 - ws.log_var[d]);
    }
    const auto m = decode(params, ws.z, ws.label, ws);
    return -log_likelihood(m, ws.target) + kl;
}

void Network::backward(std::span<const double> params, Workspace& ws, std::span<double> grad) const {
    const double inv_var = 1.0 / (arch_.decoder_sigma * arch_.decoder_sigma);
    const std::size_t layers = layout_.decoder.size();
    const std::span<const double> m = layers ? std::span<const double>(ws.dec_pre.back()) : ws.exp_pre;

    // d(loss)/d(decoder mean)
    ws.g_a.resize(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) ws.g_a[i] = (m[i] - ws.target[i]) * inv_var;

    for (std::size_t i = layers; i-- > 0;) {
        const auto& l = layout_.decoder[i];
        if (i + 1 < layers) elu_backward(ws.dec_pre[i], ws.g_a);
        const double* in = i == 0 ? ws.exp_act.data() : ws.dec_act[i - 1].data();
        ws.g_b.resize(l.lin * l.cin);
        deconv_backward(l, params.data(), in, ws.g_a.data(), grad.data(), ws.g_b.data());
        std::swap(ws.g_a, ws.g_b);
    }
    if (layers) elu_backward(ws.exp_pre, ws.g_a);
    ws.g_b.resize(layout_.expand.in);
    dense_backward(layout_.expand, params.data(), ws.dec_in.data(), ws.g_a.data(), grad.data(), ws.g_b.data());

    // Latent: z = mean + exp(lv / 2) * noise, plus the KL term.
    const std::size_t D = layout_.latent;
    std::vector<double> g_head(2 * D);
    for (std::size_t d = 0; d < D; ++d) {
        const double gz = ws.g_b[d];
        const double sd = std::exp(0.5 * ws.log_var[d]);
        g_head[d] = gz + ws.mean[d];
        const double raw = ws.head[D + d];
        const bool inside = raw > kLogVarMin && raw < kLogVarMax;
        g_head[D + d] = inside ? gz * 0.5 * sd * ws.noise[d] + 0.5 * (std::exp(ws.log_var[d]) - 1.0) : 0.0;
    }

    const std::size_t enc_layers = layout_.encoder.size();
    const double* head_in = enc_layers ? ws.enc_act.back().data() : ws.input.data();
    ws.g_a.resize(layout_.head.in);
    dense_backward(layout_.head, params.data(), head_in, g_head.data(), grad.data(), ws.g_a.data());
    for (std::size_t i = enc_layers; i-- > 0;) {
        const auto& l = layout_.encoder[i];
        elu_backward(ws.enc_pre[i], ws.g_a);
        ws.g_col.resize(l.lout * kKernel * l.cin);
        double* gin = nullptr;
        if (i > 0) {
            ws.g_b.resize(l.lin * l.cin);
            gin = ws.g_b.data();
        }
        conv_backward(l, params.data(), ws.enc_col[i].data(), ws.g_a.data(), grad.data(), ws.g_col.data(), gin);
        if (i > 0) std::swap(ws.g_a, ws.g_b);
    }
}

}  // namespace srs::cvae::detail
