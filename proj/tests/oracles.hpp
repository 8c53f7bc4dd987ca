#pragma once

// Slow, obviously-correct reference implementations used to cross-check the library.

#include "fairnorm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace oracle {

/// Fraction of scores >= t.
inline double fmr(const std::vector<double>& impostors, double t)
{
    std::size_t hits = 0;
    for (double s : impostors)
        hits += s >= t ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(impostors.size());
}

/// Fraction of scores < t.
inline double fnmr(const std::vector<double>& genuine, double t)
{
    std::size_t misses = 0;
    for (double s : genuine)
        misses += s < t ? 1 : 0;
    return static_cast<double>(misses) / static_cast<double>(genuine.size());
}

/// O(n^2) scan: tries every score value and the sentinel above the maximum, keeps the smallest admissible one.
inline double threshold(const std::vector<double>& impostors, double f)
{
    double best = std::nextafter(*std::max_element(impostors.begin(), impostors.end()),
                                 std::numeric_limits<double>::infinity());
    for (double candidate : impostors) {
        std::size_t hits = 0;
        for (double s : impostors)
            hits += s >= candidate ? 1 : 0;
        if (static_cast<double>(hits) / static_cast<double>(impostors.size()) <= f && candidate < best)
            best = candidate;
    }
    return best;
}

/// Squared Euclidean distance between row `a` of one matrix and row `b` of another, summed in index order.
template <typename M1, typename M2>
double squared_distance(const M1& x, Eigen::Index a, const M2& y, Eigen::Index b)
{
    double acc = 0.0;
    for (Eigen::Index d = 0; d < x.cols(); ++d) {
        const double diff = x(a, d) - y(b, d);
        acc += diff * diff;
    }
    return acc;
}

/// True when row `r` of `rows` is at least as close to centroid `c` as to every other centroid.
template <typename M1, typename M2>
bool nearest_is(const M1& centroids, int c, const M2& rows, Eigen::Index r)
{
    const double own = squared_distance(centroids, c, rows, r);
    for (Eigen::Index o = 0; o < centroids.rows(); ++o)
        if (squared_distance(centroids, o, rows, r) < own)
            return false;
    return true;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b)
{
    long double dot = 0, na = 0, nb = 0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        dot += static_cast<long double>(a[d]) * b[d];
        na += static_cast<long double>(a[d]) * a[d];
        nb += static_cast<long double>(b[d]) * b[d];
    }
    return static_cast<double>(dot / std::sqrt(na * nb));
}

struct SetCounts {
    std::vector<std::vector<double>> genuine, impostor;
};

/// Double loop over all pairs: a pair lands in every cluster that owns at least one endpoint.
inline SetCounts cluster_sets(const std::vector<int>& assignment, const std::vector<int>& subject,
                              const std::vector<std::vector<double>>& scores, int k)
{
    SetCounts out{std::vector<std::vector<double>>(static_cast<std::size_t>(k)),
                  std::vector<std::vector<double>>(static_cast<std::size_t>(k))};
    const std::size_t n = assignment.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (int c = 0; c < k; ++c)
                if (assignment[i] == c || assignment[j] == c) {
                    auto& dst = subject[i] == subject[j] ? out.genuine : out.impostor;
                    dst[static_cast<std::size_t>(c)].push_back(scores[i][j]);
                }
    for (auto* side : {&out.genuine, &out.impostor})
        for (auto& v : *side)
            std::sort(v.begin(), v.end());
    return out;
}

/// Random dataset with `n_subjects` subjects, 1..max_per_subject samples each and an optional "group" attribute.
inline fairnorm::EmbeddingDataset random_dataset(std::mt19937_64& rng, int n_subjects, int max_per_subject,
                                                 int dim, bool attributes = true)
{
    std::normal_distribution<float> normal;
    std::uniform_int_distribution<int> per(1, max_per_subject);
    std::vector<fairnorm::Sample> samples;
    std::vector<std::vector<float>> rows;
    for (int s = 0; s < n_subjects; ++s) {
        const int m = per(rng);
        const std::string group = std::to_string(s % 3);
        for (int r = 0; r < m; ++r) {
            fairnorm::Sample sample{"x" + std::to_string(samples.size()), "subj" + std::to_string(s), {}};
            if (attributes)
                sample.attributes["group"] = group;
            samples.push_back(std::move(sample));
            std::vector<float> v(static_cast<std::size_t>(dim));
            for (auto& x : v)
                x = normal(rng);
            rows.push_back(std::move(v));
        }
    }
    fairnorm::EmbeddingMatrix m(static_cast<Eigen::Index>(rows.size()), dim);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int d = 0; d < dim; ++d)
            m(static_cast<Eigen::Index>(r), d) = rows[r][static_cast<std::size_t>(d)];
    return fairnorm::EmbeddingDataset(std::move(samples), std::move(m));
}

}  // namespace oracle
