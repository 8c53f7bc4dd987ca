#pragma once

#include "fairnorm/thresholds.hpp"

#include <span>

namespace fairnorm {

/// Unnormalized system: match iff s >= thr_G.
inline Decision baseline_decide(double raw_score, double global_thr) noexcept
{
    return decide_at(raw_score, global_thr);
}

/// Score range of one system, estimated on its training scores.
struct MinMaxStats {
    double lo = 0.0;
    double hi = 1.0;

    /// (s - lo) / (hi - lo). Scores outside [lo, hi] are not clipped.
    double normalize(double score) const noexcept { return (score - lo) / (hi - lo); }
};

MinMaxStats fit_minmax(std::span<const double> train_scores);

/// Sum of min-max normalized scores, one per system.
double slf_fuse(std::span<const double> scores_per_system, std::span<const MinMaxStats> stats_per_system);

}  // namespace fairnorm
