#include "fairnorm/baselines.hpp"

#include "fairnorm/error.hpp"

#include <algorithm>
#include <cmath>

namespace fairnorm {

MinMaxStats fit_minmax(std::span<const double> train_scores)
{
    if (train_scores.empty())
        throw NumericError("fit_minmax: empty score set");
    const auto [lo, hi] = std::minmax_element(train_scores.begin(), train_scores.end());
    if (!std::isfinite(*lo) || !std::isfinite(*hi))
        throw NumericError("fit_minmax: non-finite training score");
    if (!(*hi > *lo))
        throw NumericError("fit_minmax: degenerate score set (all scores equal)");
    return MinMaxStats{*lo, *hi};
}

double slf_fuse(std::span<const double> scores_per_system, std::span<const MinMaxStats> stats_per_system)
{
    if (scores_per_system.size() != stats_per_system.size())
        throw UsageError("slf_fuse: " + std::to_string(scores_per_system.size()) + " scores but " +
                         std::to_string(stats_per_system.size()) + " normalizers");
    if (scores_per_system.size() < 2)
        throw UsageError("slf_fuse: fusion needs at least two systems");
    double fused = 0.0;
    for (std::size_t s = 0; s < scores_per_system.size(); ++s)
        fused += stats_per_system[s].normalize(scores_per_system[s]);
    return fused;
}

}  // namespace fairnorm
