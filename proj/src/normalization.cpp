#include "fairnorm/normalization.hpp"

#include <cmath>

namespace fairnorm {

void validate(const FairNormModel& model)
{
    const int k = model.k();
    if (k < 1 || model.dim() < 1)
        throw DataError("model has no centroids");
    if (!model.clusters.centroids.allFinite())
        throw DataError("model centroids contain non-finite values");
    const auto& t = model.thresholds;
    if (t.local.size() != static_cast<std::size_t>(k) || t.fallback.size() != static_cast<std::size_t>(k))
        throw DataError("model has " + std::to_string(k) + " centroids but " + std::to_string(t.local.size()) +
                        " local thresholds and " + std::to_string(t.fallback.size()) + " fallback flags");
    if (!(t.fmr_target > 0.0 && t.fmr_target < 1.0))
        throw DataError("model fmr_target outside (0, 1)");
    if (!std::isfinite(t.global_thr))
        throw DataError("model global threshold is not finite");
    for (std::size_t c = 0; c < t.local.size(); ++c) {
        if (!std::isfinite(t.local[c]))
            throw DataError("local threshold " + std::to_string(c) + " is not finite");
        if (t.fallback[c] && t.local[c] != t.global_thr)
            throw DataError("cluster " + std::to_string(c) + " is a fallback cluster but its threshold differs "
                            "from the global threshold");
    }
}

ThresholdTable fit_thresholds(std::span<const ScorePair> train_pairs, std::span<const int> assignments, int k,
                              double fmr_target, int min_impostor_count)
{
    const auto sets = collect_cluster_score_sets(train_pairs, assignments, k);
    std::vector<double> global_impostors;
    for (const auto& p : train_pairs)
        if (!p.genuine)
            global_impostors.push_back(p.raw_score);
    if (global_impostors.empty())
        throw NumericError("training split has no impostor pairs (needs at least two subjects)");
    return build_threshold_table(sets, global_impostors, fmr_target, min_impostor_count);
}

FairNormModel fit_fair_model(const TrainSplit& train, const FairFitOptions& options)
{
    const auto pairs = score_all_pairs(train.data(), options.workers);
    return fit_fair_model(train, options, pairs);
}

FairNormModel fit_fair_model(const TrainSplit& train, const FairFitOptions& options,
                             std::span<const ScorePair> train_pairs)
{
    const auto& data = train.data();
    const std::size_t n = data.size();
    if (train_pairs.size() != n * (n - 1) / 2)
        throw DataError("train pair table does not cover all pairs of the train split");

    KMeansOptions km = options.kmeans;
    km.workers = options.workers;
    FairNormModel model;
    model.clusters = fit_kmeans(train, km);
    model.embedding_normalized = true;
    const auto labels = assign_all(model.clusters, data.vectors(), options.workers);
    const int min_count = options.min_impostor_count.value_or(default_min_impostor_count(options.fmr_target));
    model.thresholds = fit_thresholds(train_pairs, labels, model.k(), options.fmr_target, min_count);
    return model;
}

std::vector<double> sample_deltas(const FairNormModel& model, const EmbeddingDataset& dataset, int workers)
{
    const auto labels = assign_all(model.clusters, dataset.vectors(), workers);
    std::vector<double> deltas;
    deltas.reserve(labels.size());
    for (int c : labels)
        deltas.push_back(cluster_delta(model, c));
    return deltas;
}

void normalize_pairs(std::span<const double> deltas, std::span<ScorePair> pairs)
{
    for (auto& p : pairs) {
        if (p.i >= deltas.size() || p.j >= deltas.size())
            throw DataError("pair references a sample outside the dataset");
        p.normalized_score = normalize_with_deltas(p.raw_score, deltas[p.i], deltas[p.j]);
    }
}

void normalize_pairs(const FairNormModel& model, const EmbeddingDataset& dataset, std::span<ScorePair> pairs,
                     int workers)
{
    const auto deltas = sample_deltas(model, dataset, workers);
    normalize_pairs(deltas, pairs);
}

}  // namespace fairnorm
