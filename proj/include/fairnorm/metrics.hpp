#pragma once

#include "fairnorm/dataset.hpp"
#include "fairnorm/pairs.hpp"

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fairnorm {

enum class ScoreField { raw, normalized };

ScoreField parse_score_field(const std::string& name);

/// (attribute, class label), e.g. ("gender", "female").
struct ClassKey {
    std::string attribute;
    std::string label;

    friend auto operator<=>(const ClassKey&, const ClassKey&) = default;
};

struct ClassCounts {
    std::size_t genuine = 0;
    std::size_t impostor = 0;

    friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

/// Classes with fewer genuine pairs than this are flagged as unreliable.
inline constexpr std::size_t kMinReliableGenuinePairs = 20;

/// Verification performance overall and per demographic class.
/// Every per-target vector is index-aligned with `fmr_targets`.
struct EvalReport {
    std::vector<double> fmr_targets;
    std::vector<double> thresholds;
    std::vector<double> overall_fnmr;
    std::vector<double> overall_fmr;  ///< achieved impostor match rate at each threshold
    std::size_t genuine_count = 0;
    std::size_t impostor_count = 0;
    std::vector<std::size_t> overall_misses;

    std::map<ClassKey, ClassCounts> pair_counts;
    std::map<ClassKey, std::vector<std::size_t>> per_class_misses;
    std::map<ClassKey, std::vector<double>> per_class_fnmr;
    std::map<std::string, std::vector<double>> bias_std;

    bool low_reliability(const ClassKey& key) const;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Score a pair by the chosen field; throws if a normalized score is missing.
double field_score(const ScorePair& pair, ScoreField field);

/// Evaluate a set of pairs whose indices refer to `dataset`.
///
/// Thresholds default to the evaluated field's own FMR-achieving thresholds;
/// pass `fixed_thresholds` (one per target) to judge against externally fixed ones.
/// A pair counts towards class g of attribute A when either endpoint carries g.
EvalReport evaluate(std::span<const ScorePair> pairs, const EmbeddingDataset& dataset,
                    std::span<const double> fmr_targets, ScoreField field,
                    std::optional<std::vector<double>> fixed_thresholds = std::nullopt, int workers = 1);

/// Population standard deviation.
double population_std(std::span<const double> values);

/// Sample (n - 1) standard deviation; zero for fewer than two values.
double sample_std(std::span<const double> values);

/// 100 (baseline - treated) / baseline; empty when the baseline STD is zero.
std::optional<double> bias_reduction(double baseline_std, double treated_std);

/// 100 (baseline - treated) / baseline; empty when the baseline FNMR is zero.
std::optional<double> performance_change(double baseline_fnmr, double treated_fnmr);

std::string report_to_json(const EvalReport& report, int indent = 2);

/// Aligned text table: overall FNMR, per-class FNMR, bias STD.
std::string format_report(const EvalReport& report);

}  // namespace fairnorm
