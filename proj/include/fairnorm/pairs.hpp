#pragma once

#include "fairnorm/dataset.hpp"
#include "fairnorm/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <thread>
#include <vector>

namespace fairnorm {

/// One comparison between samples `i < j` of a dataset.
struct ScorePair {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    double raw_score = 0.0;
    std::optional<double> normalized_score;
    bool genuine = false;

    friend bool operator==(const ScorePair&, const ScorePair&) = default;
};

namespace detail {

/// Fixed left-to-right summation; every score in the library goes through here,
/// so results never depend on alignment or vector width.
inline double dot(const double* a, const double* b, Eigen::Index n) noexcept
{
    double acc = 0.0;
    for (Eigen::Index d = 0; d < n; ++d)
        acc += a[d] * b[d];
    return acc;
}

inline double cosine_from_parts(double dot, double norm_a, double norm_b) noexcept
{
    return std::clamp(dot / (norm_a * norm_b), -1.0, 1.0);
}

}  // namespace detail

/// Cosine similarity evaluated in double precision regardless of the input scalar.
template <typename DerivedA, typename DerivedB>
double cosine_similarity(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b)
{
    if (a.size() != b.size())
        throw DataError("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
    const Eigen::VectorXd ad = a.derived().template cast<double>().reshaped();
    const Eigen::VectorXd bd = b.derived().template cast<double>().reshaped();
    const double na = std::sqrt(detail::dot(ad.data(), ad.data(), ad.size()));
    const double nb = std::sqrt(detail::dot(bd.data(), bd.data(), bd.size()));
    if (na == 0.0 || nb == 0.0)
        throw NumericError("cosine_similarity: zero-norm vector");
    return detail::cosine_from_parts(detail::dot(ad.data(), bd.data(), ad.size()), na, nb);
}

/// Double-precision copy of a dataset's vectors with cached norms.
/// `score(i, j)` is bit-identical to `cosine_similarity(vector(i), vector(j))`.
class PairScorer {
public:
    explicit PairScorer(const EmbeddingDataset& dataset);

    double score(std::size_t i, std::size_t j) const noexcept
    {
        const auto a = static_cast<Eigen::Index>(i);
        const auto b = static_cast<Eigen::Index>(j);
        return detail::cosine_from_parts(detail::dot(&vectors_(a, 0), &vectors_(b, 0), vectors_.cols()),
                                         norms_[a], norms_[b]);
    }

    bool genuine(std::size_t i, std::size_t j) const noexcept { return subject_[i] == subject_[j]; }

    ScorePair make_pair(std::size_t i, std::size_t j) const
    {
        return ScorePair{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), score(i, j),
                         std::nullopt, genuine(i, j)};
    }

    std::size_t size() const noexcept { return subject_.size(); }

private:
    EmbeddingMatrixT<double> vectors_;
    Eigen::VectorXd norms_;
    std::vector<int> subject_;
};

/// Sorted, de-duplicated sample references; an empty optional means "every sample".
std::vector<std::size_t> resolve_subset(std::size_t dataset_size,
                                        const std::optional<std::vector<std::size_t>>& subset);

/// Emit every unordered pair of `rows` exactly once, in lexicographic (i, j) order.
/// `rows` must be sorted ascending.
template <typename Consumer>
void for_each_pair(const PairScorer& scorer, std::span<const std::size_t> rows, Consumer&& consume,
                   std::size_t first_row = 0, std::size_t last_row = static_cast<std::size_t>(-1))
{
    last_row = std::min(last_row, rows.size());
    for (std::size_t a = first_row; a < last_row; ++a)
        for (std::size_t b = a + 1; b < rows.size(); ++b)
            consume(scorer.make_pair(rows[a], rows[b]));
}

/// Sequential streaming entry point over the whole dataset or a subset of it.
template <typename Consumer>
void generate_all_pairs(const EmbeddingDataset& dataset, const std::optional<std::vector<std::size_t>>& subset,
                        Consumer&& consume)
{
    const auto rows = resolve_subset(dataset.size(), subset);
    if (rows.size() < 2)
        throw DataError("pair generation needs at least 2 samples");
    const PairScorer scorer(dataset);
    for_each_pair(scorer, rows, consume);
}

/// Split `rows` into `workers` contiguous blocks with roughly equal pair counts.
std::vector<std::size_t> partition_pair_rows(std::size_t n_rows, int workers);

/// Parallel fold over all pairs. `Acc` needs `operator()(const ScorePair&)` and
/// `merge(Acc&&)`. Blocks are merged in row order, so an accumulator that appends
/// produces exactly the sequential emission order whatever the worker count.
template <typename Acc>
Acc accumulate_pairs(const PairScorer& scorer, std::span<const std::size_t> rows, int workers, const Acc& prototype)
{
    if (rows.size() < 2)
        throw DataError("pair generation needs at least 2 samples");
    const auto bounds = partition_pair_rows(rows.size(), workers);
    const std::size_t blocks = bounds.size() - 1;
    std::vector<Acc> partial(blocks, prototype);
    if (blocks == 1) {
        for_each_pair(scorer, rows, partial[0]);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(blocks);
        for (std::size_t w = 0; w < blocks; ++w)
            pool.emplace_back([&, w] { for_each_pair(scorer, rows, partial[w], bounds[w], bounds[w + 1]); });
    }
    Acc result = std::move(partial[0]);
    for (std::size_t w = 1; w < blocks; ++w)
        result.merge(std::move(partial[w]));
    return result;
}

/// Appending accumulator used to materialize score tables.
struct PairCollector {
    std::vector<ScorePair> pairs;
    void operator()(const ScorePair& p) { pairs.push_back(p); }
    void merge(PairCollector&& other)
    {
        pairs.insert(pairs.end(), other.pairs.begin(), other.pairs.end());
    }
};

/// All pairs of `dataset`, materialized in lexicographic order.
std::vector<ScorePair> score_all_pairs(const EmbeddingDataset& dataset, int workers = 1);

/// Per-cluster genuine/impostor score multisets.
struct ClusterScoreSets {
    int cluster_id = 0;
    std::vector<double> genuine_scores;
    std::vector<double> impostor_scores;
};

/// Routes each pair into the sets of every cluster holding at least one endpoint.
/// Pairs whose endpoints share a cluster are counted once there.
class ClusterScoreAccumulator {
public:
    ClusterScoreAccumulator(std::span<const int> assignments, int k);

    void operator()(const ScorePair& p) { add(p.i, p.j, p.raw_score, p.genuine); }
    void add(std::size_t i, std::size_t j, double score, bool genuine);
    void merge(ClusterScoreAccumulator&& other);

    std::vector<ClusterScoreSets> release() && { return std::move(sets_); }

private:
    int cluster_of(std::size_t sample) const;

    std::span<const int> assignments_;
    std::vector<ClusterScoreSets> sets_;
};

std::vector<ClusterScoreSets> collect_cluster_score_sets(std::span<const ScorePair> pairs,
                                                         std::span<const int> assignments, int k);

/// Debug dump: `i,j,raw_score,genuine`.
void write_scores_csv(std::span<const ScorePair> pairs, std::ostream& out);

/// On-disk score cache of (i, j, raw score) triples. Genuine flags are rebuilt
/// from the dataset the cache belongs to.
void save_score_cache(std::span<const ScorePair> pairs, const std::filesystem::path& path);
std::vector<ScorePair> load_score_cache(const std::filesystem::path& path, const EmbeddingDataset& dataset);

}  // namespace fairnorm
