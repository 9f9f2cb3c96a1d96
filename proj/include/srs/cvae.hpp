#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "srs/dataset.hpp"

namespace srs::cvae {

/// Network shape. The encoder is a stack of stride-2 1-D convolutions
/// (kernel 3, padding 1, ELU) over the normalized signal with the one-hot
/// label broadcast as extra channels, followed by a dense head producing the
/// latent mean and log-variance. The decoder mirrors it with a dense layer
/// on [z, one-hot] and stride-2 transposed convolutions.
struct Architecture {
    std::size_t channels = 1;
    std::size_t length = 2;
    std::size_t classes = 1;
    std::vector<std::size_t> conv_channels{16, 32, 64};
    std::size_t latent_dim = 16;
    /// Fixed per-element Gaussian observation noise on the normalized scale.
    double decoder_sigma = 0.1;

    void validate() const;
    friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct TrainConfig {
    double learning_rate = 1e-4;
    /// Passes over the training set; each pass takes ceil(N / batch_size) steps.
    std::size_t iterations = 500;
    std::size_t batch_size = 32;
    std::uint64_t seed = 7;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TensorInfo {
    std::string name;
    std::size_t offset = 0;
    std::vector<std::size_t> shape;
    std::size_t size() const noexcept;
};

struct GaussianPosterior {
    std::vector<double> mean;
    std::vector<double> log_var;
};

/// A latent-variable model with a Gaussian approximate posterior and a
/// standard-normal prior. The likelihood estimators only need this surface.
class LatentVariableModel {
public:
    virtual ~LatentVariableModel() = default;
    virtual std::size_t latent_dim() const = 0;
    virtual GaussianPosterior posterior(const TimeSeries& x, std::size_t label) const = 0;
    /// log p(x | z, label).
    virtual double log_likelihood(const TimeSeries& x, std::span<const double> z, std::size_t label) const = 0;
    /// log p(x | z_m, label) for each row of `zs` (latent_dim values per row).
    virtual std::vector<double> log_likelihoods(const TimeSeries& x, std::span<const double> zs,
                                                std::size_t label) const;
};

class CvaeModel final : public LatentVariableModel {
public:
    CvaeModel() = default;

    /// Randomly initialized model (seeded, deterministic).
    static CvaeModel initialize(const Architecture& arch, NormStats norm, std::uint64_t seed);

    const Architecture& architecture() const noexcept { return arch_; }
    const NormStats& norm() const noexcept { return norm_; }
    const std::vector<TensorInfo>& tensors() const noexcept { return tensors_; }
    std::span<const double> parameters() const noexcept { return params_; }
    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> tensor(const std::string& name) const;
    std::span<double> tensor(const std::string& name);

    std::size_t latent_dim() const override { return arch_.latent_dim; }
    GaussianPosterior posterior(const TimeSeries& x, std::size_t label) const override;
    double log_likelihood(const TimeSeries& x, std::span<const double> z, std::size_t label) const override;
    std::vector<double> log_likelihoods(const TimeSeries& x, std::span<const double> zs,
                                        std::size_t label) const override;

    /// Decoder mean on the normalized scale.
    TimeSeries decode_normalized(std::span<const double> z, std::size_t label) const;
    /// Decoder mean at the posterior mean, mapped back to signal units.
    TimeSeries reconstruct(const TimeSeries& x, std::size_t label) const;

    /// Training metadata carried with the model.
    TrainConfig train_config;
    double train_mae = 0.0;
    std::string target = "x";

    /// Internal: rebuilds tensor table for the architecture; params sized to match.
    void set_architecture(const Architecture& arch);
    void set_norm(NormStats norm) { norm_ = std::move(norm); }

private:
    Architecture arch_;
    NormStats norm_;
    std::vector<TensorInfo> tensors_;
    std::vector<double> params_;
};

/// Negative single-sample ELBO of the model at (x, label) with the latent
/// draw z = mean + exp(log_var / 2) * noise.
double negative_elbo(const CvaeModel& model, const TimeSeries& x, std::size_t label, std::span<const double> noise);

/// Same loss together with its gradient with respect to every parameter.
double negative_elbo_gradient(const CvaeModel& model, const TimeSeries& x, std::size_t label,
                              std::span<const double> noise, std::vector<double>& gradient);

/// E_q[log p(x|z,y)] - KL(q || N(0, I)) with the reconstruction term
/// evaluated at the single latent sample `z`.
double elbo(const LatentVariableModel& model, const TimeSeries& x, std::size_t label, std::span<const double> z);

/// Closed-form KL(N(mean, diag(exp(log_var))) || N(0, I)).
double kl_to_standard_normal(const GaussianPosterior& q);

/// log N(z; mean, diag(exp(log_var))).
double log_normal_density(std::span<const double> z, std::span<const double> mean, std::span<const double> log_var);

/// Importance-weighted Monte-Carlo estimate of log p(x | label) with M
/// posterior draws, computed with log-sum-exp. Deterministic in `seed`.
double mc_log_likelihood(const LatentVariableModel& model, const TimeSeries& x, std::size_t label, std::size_t samples,
                         std::uint64_t seed);

struct TrainingSample {
    TimeSeries series;
    std::size_t label = 0;
};

struct TrainReport {
    std::vector<double> epoch_loss;
    double final_mae = 0.0;
};

/// Fits a fresh model by minibatch Adam on the negative ELBO. Aborts with
/// NumericError when the loss or a parameter becomes non-finite.
CvaeModel train(std::span<const TrainingSample> data, const Architecture& arch, const TrainConfig& cfg,
                TrainReport* report = nullptr);

/// Mean absolute reconstruction error in signal units.
double reconstruction_mae(const CvaeModel& model, std::span<const TrainingSample> data);

std::vector<TrainingSample> samples_from(const LabeledDataset& ds);

inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const CvaeModel& model, const std::filesystem::path& path);
CvaeModel load_model(const std::filesystem::path& path);
std::string serialize_model(const CvaeModel& model);
CvaeModel deserialize_model(std::string_view bytes);

}  // namespace srs::cvae
