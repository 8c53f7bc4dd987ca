#pragma once

#include "fairnorm/clustering.hpp"
#include "fairnorm/dataset.hpp"
#include "fairnorm/pairs.hpp"
#include "fairnorm/thresholds.hpp"

#include <optional>
#include <span>
#include <vector>

namespace fairnorm {

/// Fitted fair-normalization model: clusters plus their local thresholds.
struct FairNormModel {
    ClusterModel clusters;
    ThresholdTable thresholds;
    bool embedding_normalized = true;  ///< vectors were L2-normalized before clustering

    int k() const noexcept { return clusters.k(); }
    Eigen::Index dim() const noexcept { return clusters.dim(); }
};

/// Throws DataError unless the model's parts agree with each other.
void validate(const FairNormModel& model);

struct FairFitOptions {
    KMeansOptions kmeans;
    double fmr_target = 1e-3;
    std::optional<int> min_impostor_count;  ///< defaults to ceil(1 / fmr_target)
    int workers = 1;
};

/// Train-phase: cluster the train split, score all its pairs, derive thresholds.
FairNormModel fit_fair_model(const TrainSplit& train, const FairFitOptions& options);

/// Same, reusing already computed train pairs (lexicographic, from `score_all_pairs`).
FairNormModel fit_fair_model(const TrainSplit& train, const FairFitOptions& options,
                             std::span<const ScorePair> train_pairs);

/// Thresholds for an already clustered train split.
ThresholdTable fit_thresholds(std::span<const ScorePair> train_pairs, std::span<const int> assignments, int k,
                              double fmr_target, int min_impostor_count);

/// thr(cluster) - thr_G for a cluster id.
inline double cluster_delta(const FairNormModel& model, int cluster)
{
    return model.thresholds.local[static_cast<std::size_t>(cluster)] - model.thresholds.global_thr;
}

/// Local-global threshold difference of the cluster `vector` falls into.
template <typename Derived>
double local_global_delta(const FairNormModel& model, const Eigen::MatrixBase<Derived>& vector)
{
    return cluster_delta(model, assign(model.clusters, vector));
}

/// s - (delta_i + delta_j) / 2, written so the two deltas commute exactly.
inline double normalize_with_deltas(double raw_score, double delta_i, double delta_j) noexcept
{
    return raw_score - 0.5 * (delta_i + delta_j);
}

template <typename DerivedA, typename DerivedB>
double normalize_score(const FairNormModel& model, double raw_score, const Eigen::MatrixBase<DerivedA>& vec_i,
                       const Eigen::MatrixBase<DerivedB>& vec_j)
{
    return normalize_with_deltas(raw_score, local_global_delta(model, vec_i), local_global_delta(model, vec_j));
}

/// Computes the cosine similarity itself, then normalizes it.
template <typename DerivedA, typename DerivedB>
double normalized_similarity(const FairNormModel& model, const Eigen::MatrixBase<DerivedA>& vec_i,
                             const Eigen::MatrixBase<DerivedB>& vec_j)
{
    return normalize_score(model, cosine_similarity(vec_i, vec_j), vec_i, vec_j);
}

template <typename DerivedA, typename DerivedB>
Decision decide(const FairNormModel& model, double raw_score, const Eigen::MatrixBase<DerivedA>& vec_i,
                const Eigen::MatrixBase<DerivedB>& vec_j)
{
    return decide_at(normalize_score(model, raw_score, vec_i, vec_j), model.thresholds.global_thr);
}

/// Per-sample deltas for a whole dataset (one assignment per sample).
std::vector<double> sample_deltas(const FairNormModel& model, const EmbeddingDataset& dataset, int workers = 1);

/// Fill `normalized_score` of every pair; pair indices refer to `dataset`.
void normalize_pairs(const FairNormModel& model, const EmbeddingDataset& dataset, std::span<ScorePair> pairs,
                     int workers = 1);

/// Same with deltas already computed by `sample_deltas`.
void normalize_pairs(std::span<const double> deltas, std::span<ScorePair> pairs);

}  // namespace fairnorm
