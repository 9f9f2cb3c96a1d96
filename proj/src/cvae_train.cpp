#include <cmath>
#include <numeric>
#include <random>

#include "cvae_net.hpp"
#include "srs/errors.hpp"

namespace srs::cvae {

std::vector<TrainingSample> samples_from(const LabeledDataset& ds) {
    std::vector<TrainingSample> out;
    out.reserve(ds.size());
    for (const auto& ex : ds.examples) out.push_back({ex.series, ex.label});
    return out;
}

double reconstruction_mae(const CvaeModel& model, std::span<const TrainingSample> data) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& s : data) {
        const TimeSeries rec = model.reconstruct(s.series, s.label);
        auto a = rec.values();
        auto b = s.series.values();
        for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
        count += a.size();
    }
    return count ? total / static_cast<double>(count) : 0.0;
}

CvaeModel train(std::span<const TrainingSample> data, const Architecture& arch, const TrainConfig& cfg,
                TrainReport* report) {
    cfg.validate();
    arch.validate();
    if (data.empty()) throw ValidationError("train: no training data");

    std::vector<TimeSeries> raw;
    raw.reserve(data.size());
    for (const auto& s : data) raw.push_back(s.series);
    CvaeModel model = CvaeModel::initialize(arch, io::fit_norm_stats(raw), cfg.seed);
    model.train_config = cfg;

    detail::Network net(arch);
    std::vector<detail::Workspace> inputs(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        net.load_input(io::normalize(data[i].series, model.norm()), data[i].label, inputs[i]);
    }

    auto params = model.parameters();
    const std::size_t P = params.size();
    std::vector<double> grad(P), m1(P, 0.0), m2(P, 0.0);
    std::vector<double> noise(arch.latent_dim);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uint64_t step = 0;
    if (report) report->epoch_loss.clear();

    for (std::size_t epoch = 0; epoch < cfg.iterations; ++epoch) {
        // Fisher-Yates with an explicit modulo draw keeps the order identical
        // across standard library implementations.
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t b = start; b < end; ++b) {
                auto& ws = inputs[order[b]];
                for (auto& e : noise) e = normal(rng);
                batch_loss += net.loss(params, noise, ws);
                net.backward(params, ws, grad);
            }
            if (!std::isfinite(batch_loss)) {
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   " (try a smaller learning rate)");
            }
            epoch_loss += batch_loss;
            const double scale = 1.0 / static_cast<double>(end - start);
            ++step;
            const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            for (std::size_t p = 0; p < P; ++p) {
                const double g = grad[p] * scale;
                m1[p] = cfg.beta1 * m1[p] + (1.0 - cfg.beta1) * g;
                m2[p] = cfg.beta2 * m2[p] + (1.0 - cfg.beta2) * g * g;
                params[p] -= cfg.learning_rate * (m1[p] / c1) / (std::sqrt(m2[p] / c2) + cfg.epsilon);
            }
        }
        if (report) report->epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    for (double p : model.parameters()) {
        if (!std::isfinite(p)) throw NumericError("train: parameters became non-finite");
    }
    model.train_mae = reconstruction_mae(model, data);
    if (report) report->final_mae = model.train_mae;
    return model;
}

}  // namespace srs::cvae
