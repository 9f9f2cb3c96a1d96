#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "srs/cvae.hpp"
#include "srs/errors.hpp"

namespace srs::cvae {

// Draws are taken from mt19937_64(seed) through std::normal_distribution,
// sample-major: z[m][d] = mean[d] + exp(log_var[d] / 2) * eps.
double mc_log_likelihood(const LatentVariableModel& model, const TimeSeries& x, std::size_t label, std::size_t samples,
                         std::uint64_t seed) {
    if (samples < 1) throw ValidationError("mc_log_likelihood: need at least one sample");
    const std::size_t D = model.latent_dim();
    const GaussianPosterior q = model.posterior(x, label);
    std::vector<double> sd(D);
    for (std::size_t d = 0; d < D; ++d) sd[d] = std::exp(0.5 * q.log_var[d]);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> zs(samples * D);
    for (std::size_t m = 0; m < samples; ++m) {
        for (std::size_t d = 0; d < D; ++d) zs[m * D + d] = q.mean[d] + sd[d] * normal(rng);
    }
    const std::vector<double> ll = model.log_likelihoods(x, zs, label);

    std::vector<double> log_w(samples);
    for (std::size_t m = 0; m < samples; ++m) {
        const std::span<const double> z(zs.data() + m * D, D);
        log_w[m] = ll[m] + log_normal_density(z, {}, {}) - log_normal_density(z, q.mean, q.log_var);
        if (!std::isfinite(log_w[m])) throw NumericError("mc_log_likelihood: non-finite importance weight");
    }
    const double peak = *std::max_element(log_w.begin(), log_w.end());
    double acc = 0.0;
    for (double w : log_w) acc += std::exp(w - peak);
    return peak + std::log(acc) - std::log(static_cast<double>(samples));
}

}  // namespace srs::cvae
