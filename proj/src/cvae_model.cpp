#include <cmath>
#include <numbers>
#include <random>

#include "cvae_net.hpp"
#include "srs/errors.hpp"

namespace srs::cvae {

void Architecture::validate() const {
    if (channels < 1) throw ConfigError("cvae: need at least one channel");
    if (length < 2) throw ConfigError("cvae: series length must be >= 2");
    if (classes < 1) throw ConfigError("cvae: need at least one class");
    if (latent_dim < 1) throw ConfigError("cvae: latent dimension must be >= 1");
    for (auto c : conv_channels) {
        if (c < 1) throw ConfigError("cvae: convolution channel counts must be >= 1");
    }
    if (!(decoder_sigma > 0.0) || !std::isfinite(decoder_sigma)) throw ConfigError("cvae: decoder sigma must be > 0");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning rate must be > 0");
    if (iterations < 1) throw ConfigError("train: iterations must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train: Adam betas in [0,1)");
    if (!(epsilon > 0.0)) throw ConfigError("train: Adam epsilon must be > 0");
}

std::size_t TensorInfo::size() const noexcept {
    std::size_t s = 1;
    for (auto d : shape) s *= d;
    return s;
}

std::vector<double> LatentVariableModel::log_likelihoods(const TimeSeries& x, std::span<const double> zs,
                                                         std::size_t label) const {
    const std::size_t D = latent_dim();
    std::vector<double> out(zs.size() / D);
    for (std::size_t m = 0; m < out.size(); ++m) out[m] = log_likelihood(x, zs.subspan(m * D, D), label);
    return out;
}

void CvaeModel::set_architecture(const Architecture& arch) {
    tensors_.clear();
    const auto layout = detail::make_layout(arch, &tensors_);
    arch_ = arch;
    params_.assign(layout.total, 0.0);
}

CvaeModel CvaeModel::initialize(const Architecture& arch, NormStats norm, std::uint64_t seed) {
    if (norm.channels() != arch.channels) throw ShapeError("cvae: normalization statistics do not match channels");
    CvaeModel m;
    m.set_architecture(arch);
    m.norm_ = std::move(norm);
    std::mt19937_64 rng(seed);
    for (const auto& t : m.tensors_) {
        if (t.shape.size() < 2) continue;  // biases start at zero
        double fan_in = 0.0;
        if (t.name.find("deconv") != std::string::npos) {
            fan_in = static_cast<double>(t.shape[0] * t.shape[2]) / 2.0;
        } else if (t.shape.size() == 3) {
            fan_in = static_cast<double>(t.shape[1] * t.shape[2]);
        } else {
            fan_in = static_cast<double>(t.shape[1]);
        }
        const double a = std::sqrt(3.0 / fan_in);
        std::uniform_real_distribution<double> dist(-a, a);
        for (std::size_t i = 0; i < t.size(); ++i) m.params_[t.offset + i] = dist(rng);
    }
    return m;
}

std::span<const double> CvaeModel::tensor(const std::string& name) const {
    for (const auto& t : tensors_) {
        if (t.name == name) return std::span<const double>(params_).subspan(t.offset, t.size());
    }
    throw ValidationError("cvae: no tensor named '" + name + "'");
}

std::span<double> CvaeModel::tensor(const std::string& name) {
    for (const auto& t : tensors_) {
        if (t.name == name) return std::span<double>(params_).subspan(t.offset, t.size());
    }
    throw ValidationError("cvae: no tensor named '" + name + "'");
}

GaussianPosterior CvaeModel::posterior(const TimeSeries& x, std::size_t label) const {
    detail::Network net(arch_);
    detail::Workspace ws;
    net.load_input(io::normalize(x, norm_), label, ws);
    net.encode(params_, ws);
    return {ws.mean, ws.log_var};
}

double CvaeModel::log_likelihood(const TimeSeries& x, std::span<const double> z, std::size_t label) const {
    if (z.size() != arch_.latent_dim) throw ShapeError("cvae: latent vector has the wrong size");
    detail::Network net(arch_);
    detail::Workspace ws;
    net.load_input(io::normalize(x, norm_), label, ws);
    const auto m = net.decode(params_, z, label, ws);
    return net.log_likelihood(m, ws.target);
}

std::vector<double> CvaeModel::log_likelihoods(const TimeSeries& x, std::span<const double> zs,
                                               std::size_t label) const {
    const std::size_t D = arch_.latent_dim;
    if (zs.size() % D != 0) throw ShapeError("cvae: latent batch is not a multiple of the latent size");
    detail::Network net(arch_);
    detail::Workspace ws;
    net.load_input(io::normalize(x, norm_), label, ws);
    std::vector<double> out(zs.size() / D);
    for (std::size_t m = 0; m < out.size(); ++m) {
        const auto mean = net.decode(params_, zs.subspan(m * D, D), label, ws);
        out[m] = net.log_likelihood(mean, ws.target);
    }
    return out;
}

TimeSeries CvaeModel::decode_normalized(std::span<const double> z, std::size_t label) const {
    if (z.size() != arch_.latent_dim) throw ShapeError("cvae: latent vector has the wrong size");
    if (label >= arch_.classes) throw ValidationError("cvae: label out of range");
    detail::Network net(arch_);
    detail::Workspace ws;
    const auto m = net.decode(params_, z, label, ws);
    const std::size_t n = arch_.channels;
    TimeSeries out(n, arch_.length);
    for (std::size_t t = 0; t < arch_.length; ++t) {
        for (std::size_t c = 0; c < n; ++c) out(c, t) = m[t * n + c];
    }
    return out;
}

TimeSeries CvaeModel::reconstruct(const TimeSeries& x, std::size_t label) const {
    const auto q = posterior(x, label);
    return io::denormalize(decode_normalized(q.mean, label), norm_);
}

double negative_elbo(const CvaeModel& model, const TimeSeries& x, std::size_t label, std::span<const double> noise) {
    detail::Network net(model.architecture());
    detail::Workspace ws;
    net.load_input(io::normalize(x, model.norm()), label, ws);
    return net.loss(model.parameters(), noise, ws);
}

double negative_elbo_gradient(const CvaeModel& model, const TimeSeries& x, std::size_t label,
                              std::span<const double> noise, std::vector<double>& gradient) {
    detail::Network net(model.architecture());
    detail::Workspace ws;
    net.load_input(io::normalize(x, model.norm()), label, ws);
    const double loss = net.loss(model.parameters(), noise, ws);
    gradient.assign(model.parameters().size(), 0.0);
    net.backward(model.parameters(), ws, gradient);
    return loss;
}

double kl_to_standard_normal(const GaussianPosterior& q) {
    double kl = 0.0;
    for (std::size_t d = 0; d < q.mean.size(); ++d) {
        kl += 0.5 * (std::exp(q.log_var[d]) + q.mean[d] * q.mean[d] - 1.0 - q.log_var[d]);
    }
    return kl;
}

double log_normal_density(std::span<const double> z, std::span<const double> mean, std::span<const double> log_var) {
    double s = 0.0;
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    for (std::size_t d = 0; d < z.size(); ++d) {
        const double lv = log_var.empty() ? 0.0 : log_var[d];
        const double mu = mean.empty() ? 0.0 : mean[d];
        const double diff = z[d] - mu;
        s += -0.5 * diff * diff * std::exp(-lv) - 0.5 * lv - half_log_2pi;
    }
    return s;
}

double elbo(const LatentVariableModel& model, const TimeSeries& x, std::size_t label, std::span<const double> z) {
    const auto q = model.posterior(x, label);
    const double value = model.log_likelihood(x, z, label) - kl_to_standard_normal(q);
    if (!std::isfinite(value)) throw NumericError("elbo: non-finite value");
    return value;
}

}  // namespace srs::cvae
