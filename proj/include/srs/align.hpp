#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "srs/dataset.hpp"
#include "srs/dtw.hpp"
#include "srs/stl.hpp"

namespace srs::align {

enum class RunKind { OneToOne, OneToMany, ManyToOne };

std::string_view run_kind_name(RunKind k) noexcept;

/// A maximal run of identical steps on a warp path. Index ranges are
/// half-open: OneToMany spans one x step and `length` pattern steps,
/// ManyToOne the converse, OneToOne `length` steps of each.
struct RunClass {
    RunKind kind = RunKind::OneToOne;
    std::size_t x_begin = 0;
    std::size_t x_end = 0;
    std::size_t s_begin = 0;
    std::size_t s_end = 0;
    std::size_t length = 0;

    friend bool operator==(const RunClass&, const RunClass&) = default;
};

/// Longest run on the path. Equal lengths prefer OneToOne, then OneToMany,
/// then ManyToOne; within a kind the earliest run wins.
RunClass longest_run(const WarpPath& path);

/// Expand / Reduce / Translate selected by the run kind. The output keeps the
/// shape of `x`: Expand trims from the end, Reduce and Translate replicate
/// edge values.
TimeSeries apply_transform(const TimeSeries& x, const RunClass& run);

struct AlignStep {
    TimeSeries series;
    RunClass run;
    double cost_before = 0.0;
    double cost_after = 0.0;
    bool changed = false;
};

/// One guarded alignment of x against pattern s: the transform is kept only
/// if it strictly lowers the DTW cost.
AlignStep align_to_pattern(const TimeSeries& x, const TimeSeries& s);

struct PassStats {
    std::size_t changed = 0;
    double mean_cost_before = 0.0;
    double mean_cost_after = 0.0;
};

struct AlignResult {
    LabeledDataset data;
    stl::ClassDecomposition patterns;
    std::vector<PassStats> passes;
};

/// Aligns every example against its class pattern for `passes` rounds,
/// recomputing the patterns from the aligned data after each round.
AlignResult align_dataset(const LabeledDataset& ds, const stl::ClassDecomposition& dec, std::size_t passes,
                          const stl::StlConfig& config = {});

}  // namespace srs::align
