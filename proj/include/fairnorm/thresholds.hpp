#pragma once

#include "fairnorm/pairs.hpp"

#include <span>
#include <vector>

namespace fairnorm {

enum class Decision { non_match, match };

/// The one decision rule used everywhere: match iff score >= threshold.
inline Decision decide_at(double score, double threshold) noexcept
{
    return score >= threshold ? Decision::match : Decision::non_match;
}

inline const char* to_string(Decision d) noexcept { return d == Decision::match ? "match" : "non-match"; }

/// Smallest threshold, drawn from the score values or the sentinel just above
/// the maximum, whose empirical FMR on `impostor_scores` is at most `fmr_target`.
double threshold_at_fmr(std::span<const double> impostor_scores, double fmr_target);

/// Fraction of genuine scores strictly below `threshold`.
double fnmr_at_threshold(std::span<const double> genuine_scores, double threshold);

/// Fraction of impostor scores at or above `threshold`.
double fmr_at_threshold(std::span<const double> impostor_scores, double threshold);

/// ceil(1 / fmr_target): below this many impostor scores a cluster falls back to the global threshold.
int default_min_impostor_count(double fmr_target);

struct ThresholdTable {
    double fmr_target = 1e-3;
    std::vector<double> local;
    double global_thr = 0.0;
    std::vector<bool> fallback;
    int min_impostor_count = 1000;

    int k() const noexcept { return static_cast<int>(local.size()); }
};

ThresholdTable build_threshold_table(std::span<const ClusterScoreSets> cluster_sets,
                                     std::span<const double> global_impostors, double fmr_target,
                                     int min_impostor_count);

/// One point of a DET curve.
struct DetPoint {
    double threshold;
    double fmr;
    double fnmr;
};

/// (threshold, FMR, FNMR) at every distinct score value plus the sentinel above the maximum.
std::vector<DetPoint> det_curve(std::span<const double> genuine_scores, std::span<const double> impostor_scores);

}  // namespace fairnorm
