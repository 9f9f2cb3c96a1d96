#pragma once

#include <span>
#include <vector>

namespace srs::eval {

/// Scalar OOD rankings (higher = more OOD) for the two populations.
struct ScoredSet {
    std::vector<double> id;
    std::vector<double> ood;
};

/// P(ood > id) + 0.5 P(ood == id) over all pairs, by tie-averaged ranks.
double auroc(const ScoredSet& s);

struct F1Point {
    double f1 = 0.0;
    double threshold = 0.0;
};

/// Best F1 with OOD as the positive class over thresholds at every distinct
/// score (score >= threshold predicts OOD); the smallest threshold wins ties.
F1Point max_f1(const ScoredSet& s);

/// F1 of the single rule score >= threshold.
double f1_at(const ScoredSet& s, double threshold);

}  // namespace srs::eval
