#include "srs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "srs/errors.hpp"

namespace srs::eval {
namespace {

void require(const ScoredSet& s) {
    if (s.id.empty() || s.ood.empty()) throw ValidationError("metrics need non-empty ID and OOD score lists");
    for (double v : s.id) {
        if (!std::isfinite(v)) throw ValidationError("metrics: non-finite ID score");
    }
    for (double v : s.ood) {
        if (!std::isfinite(v)) throw ValidationError("metrics: non-finite OOD score");
    }
}

// (score, is_ood) sorted ascending by score.
std::vector<std::pair<double, bool>> merged(const ScoredSet& s) {
    std::vector<std::pair<double, bool>> all;
    all.reserve(s.id.size() + s.ood.size());
    for (double v : s.id) all.emplace_back(v, false);
    for (double v : s.ood) all.emplace_back(v, true);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return all;
}

}  // namespace

double auroc(const ScoredSet& s) {
    require(s);
    const auto all = merged(s);
    // Sum of OOD ranks (1-based, ties averaged), kept doubled to stay integral.
    double rank_sum2 = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        std::size_t ood_in_tie = 0;
        while (j < all.size() && all[j].first == all[i].first) {
            ood_in_tie += all[j].second ? 1 : 0;
            ++j;
        }
        rank_sum2 += static_cast<double>(ood_in_tie) * static_cast<double>(i + 1 + j);
        i = j;
    }
    const double n_ood = static_cast<double>(s.ood.size());
    const double n_id = static_cast<double>(s.id.size());
    const double u = rank_sum2 / 2.0 - n_ood * (n_ood + 1.0) / 2.0;
    return u / (n_ood * n_id);
}

double f1_at(const ScoredSet& s, double threshold) {
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (double v : s.ood) tp += v >= threshold ? 1 : 0;
    for (double v : s.id) fp += v >= threshold ? 1 : 0;
    const std::size_t fn = s.ood.size() - tp;
    const double denom = static_cast<double>(2 * tp + fp + fn);
    return denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
}

F1Point max_f1(const ScoredSet& s) {
    require(s);
    const auto all = merged(s);
    // Sweep thresholds upward; at all[i].first everything from i on is predicted OOD.
    std::size_t tp = s.ood.size();
    std::size_t fp = s.id.size();
    const std::size_t pos = s.ood.size();
    F1Point best{-1.0, all.front().first};
    std::size_t i = 0;
    while (i < all.size()) {
        const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(tp + fp + pos);
        if (f1 > best.f1) best = {f1, all[i].first};
        std::size_t j = i;
        while (j < all.size() && all[j].first == all[i].first) {
            if (all[j].second) {
                --tp;
            } else {
                --fp;
            }
            ++j;
        }
        i = j;
    }
    return best;
}

}  // namespace srs::eval
