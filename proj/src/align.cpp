#include "srs/align.hpp"

#include <algorithm>

#include "srs/errors.hpp"
#include "srs/parallel.hpp"

namespace srs::align {

std::string_view run_kind_name(RunKind k) noexcept {
    switch (k) {
        case RunKind::OneToOne: return "one_to_one";
        case RunKind::OneToMany: return "one_to_many";
        case RunKind::ManyToOne: return "many_to_one";
    }
    return "one_to_one";
}

namespace {

int kind_rank(RunKind k) noexcept {
    switch (k) {
        case RunKind::OneToOne: return 0;
        case RunKind::OneToMany: return 1;
        case RunKind::ManyToOne: return 2;
    }
    return 3;
}

RunKind step_kind(const std::pair<std::size_t, std::size_t>& a, const std::pair<std::size_t, std::size_t>& b) {
    if (b.first == a.first + 1 && b.second == a.second + 1) return RunKind::OneToOne;
    if (b.first == a.first && b.second == a.second + 1) return RunKind::OneToMany;
    if (b.first == a.first + 1 && b.second == a.second) return RunKind::ManyToOne;
    throw ValidationError("warp path has a non-unit step");
}

bool better(const RunClass& cand, const RunClass& best) {
    if (cand.length != best.length) return cand.length > best.length;
    return kind_rank(cand.kind) < kind_rank(best.kind);
}

}  // namespace

RunClass longest_run(const WarpPath& path) {
    if (path.pairs.empty()) throw ValidationError("empty warp path");
    const auto& p = path.pairs;
    RunClass best{RunKind::OneToOne, p[0].first, p[0].first + 1, p[0].second, p[0].second + 1, 1};
    std::size_t k = 0;
    while (k + 1 < p.size()) {
        const RunKind kind = step_kind(p[k], p[k + 1]);
        std::size_t e = k + 1;
        while (e + 1 < p.size() && step_kind(p[e], p[e + 1]) == kind) ++e;
        RunClass cand{kind, p[k].first, p[e].first + 1, p[k].second, p[e].second + 1, e - k + 1};
        if (better(cand, best)) best = cand;
        k = e;
    }
    return best;
}

TimeSeries apply_transform(const TimeSeries& x, const RunClass& run) {
    const std::size_t T = x.length();
    TimeSeries out(x.channels(), T);
    for (std::size_t c = 0; c < x.channels(); ++c) {
        auto src = x.channel(c);
        auto dst = out.channel(c);
        std::vector<double> seq;
        seq.reserve(T + run.length);
        switch (run.kind) {
            case RunKind::OneToMany: {
                const std::size_t i = std::min(run.x_begin, T - 1);
                seq.assign(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(i) + 1);
                seq.insert(seq.end(), run.length - 1, src[i]);
                seq.insert(seq.end(), src.begin() + static_cast<std::ptrdiff_t>(i) + 1, src.end());
                break;
            }
            case RunKind::ManyToOne: {
                const std::size_t b = std::min(run.x_begin, T - 1);
                const std::size_t e = std::min(run.x_end, T);
                seq.assign(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(b));
                double s = 0.0;
                for (std::size_t t = b; t < e; ++t) s += src[t];
                seq.push_back(s / static_cast<double>(e - b));
                seq.insert(seq.end(), src.begin() + static_cast<std::ptrdiff_t>(e), src.end());
                break;
            }
            case RunKind::OneToOne: {
                const auto shift = static_cast<std::ptrdiff_t>(run.s_begin) - static_cast<std::ptrdiff_t>(run.x_begin);
                for (std::size_t t = 0; t < T; ++t) {
                    const auto from = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(t) - shift, 0,
                                                                 static_cast<std::ptrdiff_t>(T) - 1);
                    seq.push_back(src[static_cast<std::size_t>(from)]);
                }
                break;
            }
        }
        if (seq.size() < T) seq.resize(T, seq.back());
        std::copy_n(seq.begin(), T, dst.begin());
    }
    return out;
}

AlignStep align_to_pattern(const TimeSeries& x, const TimeSeries& s) {
    const WarpPath path = dtw(x, s);
    AlignStep step{x, longest_run(path), path.cost, path.cost, false};
    TimeSeries candidate = apply_transform(x, step.run);
    const double after = dtw_cost(candidate, s);
    if (after < path.cost) {
        step.series = std::move(candidate);
        step.cost_after = after;
        step.changed = true;
    }
    return step;
}

AlignResult align_dataset(const LabeledDataset& ds, const stl::ClassDecomposition& dec, std::size_t passes,
                          const stl::StlConfig& config) {
    for (const auto& ex : ds.examples) {
        if (!dec.has_class(ex.label)) {
            throw ValidationError("alignment: no pattern for class " + std::to_string(ex.label));
        }
    }
    AlignResult result{ds, dec, {}};
    for (std::size_t pass = 0; pass < passes; ++pass) {
        std::vector<AlignStep> steps(result.data.size());
        parallel_for(result.data.size(), [&](std::size_t i) {
            const auto& ex = result.data.examples[i];
            steps[i] = align_to_pattern(ex.series, result.patterns.pattern(ex.label));
        });
        PassStats stats;
        for (std::size_t i = 0; i < steps.size(); ++i) {
            stats.mean_cost_before += steps[i].cost_before;
            stats.mean_cost_after += steps[i].cost_after;
            if (steps[i].changed) {
                ++stats.changed;
                result.data.examples[i].series = std::move(steps[i].series);
            }
        }
        if (!steps.empty()) {
            stats.mean_cost_before /= static_cast<double>(steps.size());
            stats.mean_cost_after /= static_cast<double>(steps.size());
        }
        result.passes.push_back(stats);
        result.patterns = stl::class_patterns(result.data, config);
    }
    return result;
}

}  // namespace srs::align
