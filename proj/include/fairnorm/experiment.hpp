#pragma once

#include "fairnorm/baselines.hpp"
#include "fairnorm/dataset.hpp"
#include "fairnorm/metrics.hpp"
#include "fairnorm/normalization.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fairnorm {

enum class Method { fair, global, slf };
enum class ThresholdSource { train, test };

Method parse_method(const std::string& name);
ThresholdSource parse_threshold_source(const std::string& name);
const char* to_string(Method m) noexcept;

struct ExperimentConfig {
    std::vector<std::filesystem::path> dataset_paths;  ///< one system, or two for slf
    std::optional<DatasetFormat> format;                ///< guessed from the extension when empty

    Method method = Method::fair;
    int k = 100;
    double fit_fmr = 1e-3;  ///< FMR the local and global thresholds are fitted at
    std::vector<double> fmr_targets{1e-3, 1e-4, 1e-5};
    int n_folds = 5;
    std::uint64_t seed = 0;
    ThresholdSource threshold_source = ThresholdSource::test;
    std::optional<int> min_impostor_count;
    int max_iters = 300;
    double tol = 1e-4;
    int workers = 1;
    std::optional<std::filesystem::path> cache_dir;  ///< raw score cache for sweeps
};

/// Mean and spread of one report cell across folds.
struct CellStats {
    std::vector<double> per_fold;
    double mean = 0.0;
    double std_sample = 0.0;
    double std_population = 0.0;

    friend bool operator==(const CellStats&, const CellStats&) = default;
};

CellStats summarize(std::vector<double> per_fold);

struct AggregatedReport {
    std::vector<double> fmr_targets;
    std::vector<CellStats> overall_fnmr;
    std::map<ClassKey, std::vector<CellStats>> per_class_fnmr;
    std::map<std::string, std::vector<CellStats>> bias_std;
    std::vector<EvalReport> folds;

    friend bool operator==(const AggregatedReport&, const AggregatedReport&) = default;
};

/// Per-cell mean/std over folds. Cells missing from some folds aggregate over the folds that have them.
AggregatedReport aggregate(std::vector<EvalReport> folds);

/// Load the configured datasets (aligning the second system to the first by sample_id).
std::vector<EmbeddingDataset> load_systems(const ExperimentConfig& config);

/// Reorder `other` so its rows follow `reference`'s sample_id order; both must hold the same IDs.
EmbeddingDataset align_to(const EmbeddingDataset& reference, const EmbeddingDataset& other);

AggregatedReport run_experiment(const ExperimentConfig& config);
AggregatedReport run_experiment(std::span<const EmbeddingDataset> systems, const ExperimentConfig& config);

struct SweepEntry {
    int k = 0;
    std::vector<CellStats> fnmr;  ///< one per FMR target

    friend bool operator==(const SweepEntry&, const SweepEntry&) = default;
};

struct SweepResult {
    std::vector<double> fmr_targets;
    std::vector<SweepEntry> entries;  ///< ks strictly increasing
    std::vector<CellStats> baseline;  ///< unnormalized system, same folds

    friend bool operator==(const SweepResult&, const SweepResult&) = default;
};

/// Default grid, clipped to `max_k`.
std::vector<int> default_sweep_grid(int max_k);

/// Smallest train split size over the configured folds.
std::size_t min_train_size(const EmbeddingDataset& dataset, const ExperimentConfig& config);

/// Overall FNMR of the fair method for each k, reusing folds and raw scores.
SweepResult sweep_k(const EmbeddingDataset& dataset, const ExperimentConfig& config, std::vector<int> ks);

/// `k,fmr_target,mean_fnmr,std_sample,std_population,baseline_mean,baseline_std_sample`.
void write_sweep_csv(const SweepResult& result, std::ostream& out);

struct ThresholdRow {
    std::string sample_id;
    int cluster_id = 0;
    double local_threshold = 0.0;
};

/// One row per sample: the local threshold of the cluster it falls into.
std::vector<ThresholdRow> export_thresholds(const FairNormModel& model, const EmbeddingDataset& dataset);

void write_thresholds_csv(std::span<const ThresholdRow> rows, std::ostream& out);

std::string aggregated_to_json(const AggregatedReport& report, int indent = 2);

/// Text table of a single aggregated report (mean +- sample std over folds).
std::string format_aggregated(const AggregatedReport& report);

/// Baseline vs treated: FNMR per class with performance change, bias STD with reduction rate.
std::string format_comparison(const AggregatedReport& baseline, const AggregatedReport& treated,
                              const std::string& treated_name);

std::string comparison_to_json(const AggregatedReport& baseline, const AggregatedReport& treated, int indent = 2);

}  // namespace fairnorm
