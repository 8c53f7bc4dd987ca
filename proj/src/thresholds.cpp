#include "fairnorm/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fairnorm {

namespace {

void check_fmr(double fmr_target)
{
    if (!(fmr_target > 0.0 && fmr_target < 1.0))
        throw UsageError("fmr_target must lie in (0, 1), got " + std::to_string(fmr_target));
}

double above(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()); }

}  // namespace

double threshold_at_fmr(std::span<const double> impostor_scores, double fmr_target)
{
    check_fmr(fmr_target);
    if (impostor_scores.empty())
        throw NumericError("threshold_at_fmr: empty impostor score set");
    std::vector<double> sorted(impostor_scores.begin(), impostor_scores.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    const auto total = static_cast<double>(n);

    // Scan distinct values from the top; the accepted count only grows as t drops,
    // so the last value still meeting the target is the minimal threshold.
    double best = above(sorted.back());
    std::size_t idx = n;
    while (idx > 0) {
        const double value = sorted[idx - 1];
        const auto first = static_cast<std::size_t>(
            std::lower_bound(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx), value) -
            sorted.begin());
        const auto matches = static_cast<double>(n - first);
        if (matches / total > fmr_target)
            break;
        best = value;
        idx = first;
    }
    return best;
}

double fnmr_at_threshold(std::span<const double> genuine_scores, double threshold)
{
    if (genuine_scores.empty())
        throw NumericError("fnmr_at_threshold: empty genuine score set");
    const auto misses = std::count_if(genuine_scores.begin(), genuine_scores.end(),
                                      [threshold](double s) { return s < threshold; });
    return static_cast<double>(misses) / static_cast<double>(genuine_scores.size());
}

double fmr_at_threshold(std::span<const double> impostor_scores, double threshold)
{
    if (impostor_scores.empty())
        throw NumericError("fmr_at_threshold: empty impostor score set");
    const auto hits = std::count_if(impostor_scores.begin(), impostor_scores.end(),
                                    [threshold](double s) { return s >= threshold; });
    return static_cast<double>(hits) / static_cast<double>(impostor_scores.size());
}

int default_min_impostor_count(double fmr_target)
{
    check_fmr(fmr_target);
    return static_cast<int>(std::ceil(1.0 / fmr_target));
}

ThresholdTable build_threshold_table(std::span<const ClusterScoreSets> cluster_sets,
                                     std::span<const double> global_impostors, double fmr_target,
                                     int min_impostor_count)
{
    if (min_impostor_count < 1)
        throw UsageError("min_impostor_count must be positive");
    ThresholdTable table;
    table.fmr_target = fmr_target;
    table.min_impostor_count = min_impostor_count;
    table.global_thr = threshold_at_fmr(global_impostors, fmr_target);
    table.local.reserve(cluster_sets.size());
    table.fallback.reserve(cluster_sets.size());
    for (const auto& set : cluster_sets) {
        const bool enough = set.impostor_scores.size() >= static_cast<std::size_t>(min_impostor_count);
        table.local.push_back(enough ? threshold_at_fmr(set.impostor_scores, fmr_target) : table.global_thr);
        table.fallback.push_back(!enough);
    }
    return table;
}

std::vector<DetPoint> det_curve(std::span<const double> genuine_scores, std::span<const double> impostor_scores)
{
    if (genuine_scores.empty() || impostor_scores.empty())
        throw NumericError("det_curve: needs genuine and impostor scores");
    std::vector<double> gen(genuine_scores.begin(), genuine_scores.end());
    std::vector<double> imp(impostor_scores.begin(), impostor_scores.end());
    std::sort(gen.begin(), gen.end());
    std::sort(imp.begin(), imp.end());
    std::vector<double> candidates;
    candidates.reserve(gen.size() + imp.size() + 1);
    std::merge(gen.begin(), gen.end(), imp.begin(), imp.end(), std::back_inserter(candidates));
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    candidates.push_back(above(candidates.back()));

    std::vector<DetPoint> out;
    out.reserve(candidates.size());
    const auto ng = static_cast<double>(gen.size());
    const auto ni = static_cast<double>(imp.size());
    for (double t : candidates) {
        const auto below_gen = std::lower_bound(gen.begin(), gen.end(), t) - gen.begin();
        const auto below_imp = std::lower_bound(imp.begin(), imp.end(), t) - imp.begin();
        out.push_back({t, (ni - static_cast<double>(below_imp)) / ni, static_cast<double>(below_gen) / ng});
    }
    return out;
}

}  // namespace fairnorm
