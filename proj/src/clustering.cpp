#include "fairnorm/clustering.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <thread>

namespace fairnorm {

namespace {

double squared_distance(const double* a, const double* b, Eigen::Index n) noexcept
{
    double acc = 0.0;
    for (Eigen::Index d = 0; d < n; ++d) {
        const double diff = a[d] - b[d];
        acc += diff * diff;
    }
    return acc;
}

struct Nearest {
    int cluster = 0;
    double distance = 0.0;
};

Nearest nearest(const EmbeddingMatrixT<double>& centroids, const double* x)
{
    Nearest best{0, std::numeric_limits<double>::infinity()};
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
        const double d = squared_distance(&centroids(c, 0), x, centroids.cols());
        if (d < best.distance)
            best = {static_cast<int>(c), d};
    }
    return best;
}

template <typename Fn>
void parallel_rows(Eigen::Index n, int workers, Fn&& fn)
{
    const auto w = static_cast<Eigen::Index>(std::clamp<Eigen::Index>(workers, 1, std::max<Eigen::Index>(n, 1)));
    if (w == 1) {
        fn(Eigen::Index{0}, n);
        return;
    }
    std::vector<std::jthread> pool;
    for (Eigen::Index t = 0; t < w; ++t)
        pool.emplace_back([&, t] { fn(n * t / w, n * (t + 1) / w); });
}

// Writes labels and distances; returns the inertia summed in row order.
double assignment_step(const EmbeddingMatrixT<double>& data, const EmbeddingMatrixT<double>& centroids,
                       std::vector<int>& labels, std::vector<double>& dists, int workers)
{
    parallel_rows(data.rows(), workers, [&](Eigen::Index lo, Eigen::Index hi) {
        for (Eigen::Index r = lo; r < hi; ++r) {
            const auto best = nearest(centroids, &data(r, 0));
            labels[static_cast<std::size_t>(r)] = best.cluster;
            dists[static_cast<std::size_t>(r)] = best.distance;
        }
    });
    double total = 0.0;
    for (double d : dists)
        total += d;
    return total;
}

EmbeddingMatrixT<double> kmeans_plus_plus(const EmbeddingMatrixT<double>& data, int k, std::mt19937_64& rng)
{
    const Eigen::Index n = data.rows();
    EmbeddingMatrixT<double> centroids(k, data.cols());
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    centroids.row(0) = data.row(pick(rng));

    std::vector<double> closest(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r)
        closest[static_cast<std::size_t>(r)] = squared_distance(&data(r, 0), &centroids(0, 0), data.cols());

    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (double d : closest)
            total += d;
        Eigen::Index chosen = n - 1;
        if (total > 0.0) {
            const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
            double cumulative = 0.0;
            for (Eigen::Index r = 0; r < n; ++r) {
                cumulative += closest[static_cast<std::size_t>(r)];
                if (cumulative > target) {
                    chosen = r;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        centroids.row(c) = data.row(chosen);
        for (Eigen::Index r = 0; r < n; ++r) {
            auto& cur = closest[static_cast<std::size_t>(r)];
            cur = std::min(cur, squared_distance(&data(r, 0), &centroids(c, 0), data.cols()));
        }
    }
    return centroids;
}

// Moves every empty centroid onto the sample farthest from its own centroid,
// taking samples only from clusters that can spare one. Returns false when no
// cluster was empty.
bool repair_empty_clusters(const EmbeddingMatrixT<double>& data, EmbeddingMatrixT<double>& centroids,
                           std::vector<int>& labels, std::vector<double>& dists)
{
    const int k = static_cast<int>(centroids.rows());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int l : labels)
        ++counts[static_cast<std::size_t>(l)];
    bool repaired = false;
    for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0)
            continue;
        std::size_t far = labels.size();
        double far_dist = -1.0;
        for (std::size_t r = 0; r < labels.size(); ++r) {
            if (counts[static_cast<std::size_t>(labels[r])] > 1 && dists[r] > far_dist) {
                far = r;
                far_dist = dists[r];
            }
        }
        if (far == labels.size())
            throw NumericError("k-means: cannot populate " + std::to_string(k) + " clusters from " +
                               std::to_string(labels.size()) + " samples");
        centroids.row(c) = data.row(static_cast<Eigen::Index>(far));
        --counts[static_cast<std::size_t>(labels[far])];
        labels[far] = c;
        dists[far] = 0.0;
        counts[static_cast<std::size_t>(c)] = 1;
        repaired = true;
    }
    return repaired;
}

bool has_empty_cluster(const std::vector<int>& labels, int k)
{
    std::vector<char> used(static_cast<std::size_t>(k), 0);
    for (int l : labels)
        used[static_cast<std::size_t>(l)] = 1;
    return std::find(used.begin(), used.end(), 0) != used.end();
}

}  // namespace

ClusterModel fit_kmeans_unit(const EmbeddingMatrixT<double>& data, const KMeansOptions& options)
{
    const int k = options.k;
    const Eigen::Index n = data.rows();
    if (k < 1)
        throw UsageError("k must be at least 1");
    if (n < k)
        throw DataError("k=" + std::to_string(k) + " exceeds the number of training samples (" +
                        std::to_string(n) + ")");
    if (options.max_iters < 1)
        throw UsageError("max_iters must be at least 1");

    std::mt19937_64 rng(options.seed);
    ClusterModel model;
    model.seed = options.seed;
    model.centroids = kmeans_plus_plus(data, k, rng);

    std::vector<int> labels(static_cast<std::size_t>(n));
    std::vector<double> dists(static_cast<std::size_t>(n));
    EmbeddingMatrixT<double> next(k, data.cols());
    std::vector<int> counts(static_cast<std::size_t>(k));

    for (int iter = 0; iter < options.max_iters; ++iter) {
        model.inertia_history.push_back(assignment_step(data, model.centroids, labels, dists, options.workers));
        repair_empty_clusters(data, model.centroids, labels, dists);

        next.setZero();
        std::fill(counts.begin(), counts.end(), 0);
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto c = static_cast<std::size_t>(labels[static_cast<std::size_t>(r)]);
            next.row(static_cast<Eigen::Index>(c)) += data.row(r);
            ++counts[c];
        }
        double shift = 0.0;
        for (int c = 0; c < k; ++c) {
            next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
            shift = std::max(shift, std::sqrt(squared_distance(&next(c, 0), &model.centroids(c, 0), data.cols())));
        }
        model.centroids.swap(next);
        model.iterations_run = iter + 1;
        if (shift < options.tol) {
            model.converged = true;
            break;
        }
    }

    // Final assignment against the returned centroids; every cluster must own a sample.
    model.inertia_history.push_back(assignment_step(data, model.centroids, labels, dists, options.workers));
    for (int attempt = 0; attempt <= k && has_empty_cluster(labels, k); ++attempt) {
        repair_empty_clusters(data, model.centroids, labels, dists);
        model.inertia_history.push_back(assignment_step(data, model.centroids, labels, dists, options.workers));
    }
    if (has_empty_cluster(labels, k))
        throw NumericError("k-means: duplicate samples leave a cluster empty at k=" + std::to_string(k));
    return model;
}

int nearest_centroid(const ClusterModel& model, const double* unit_vector)
{
    return nearest(model.centroids, unit_vector).cluster;
}

std::vector<int> assign_all(const ClusterModel& model, const EmbeddingMatrix& vectors, int workers)
{
    if (vectors.cols() != model.dim())
        throw DataError("assign: vectors have dimension " + std::to_string(vectors.cols()) + ", model expects " +
                        std::to_string(model.dim()));
    const auto unit = l2_normalize_rows(vectors);
    std::vector<int> labels(static_cast<std::size_t>(unit.rows()));
    parallel_rows(unit.rows(), workers, [&](Eigen::Index lo, Eigen::Index hi) {
        for (Eigen::Index r = lo; r < hi; ++r)
            labels[static_cast<std::size_t>(r)] = nearest_centroid(model, &unit(r, 0));
    });
    return labels;
}

double inertia(const ClusterModel& model, const EmbeddingMatrixT<double>& unit_rows)
{
    double total = 0.0;
    for (Eigen::Index r = 0; r < unit_rows.rows(); ++r)
        total += nearest(model.centroids, &unit_rows(r, 0)).distance;
    return total;
}

}  // namespace fairnorm
