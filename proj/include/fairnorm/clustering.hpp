#pragma once

#include "fairnorm/dataset.hpp"
#include "fairnorm/error.hpp"
#include "fairnorm/pairs.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace fairnorm {

struct KMeansOptions {
    int k = 100;
    std::uint64_t seed = 0;
    int max_iters = 300;
    double tol = 1e-4;  ///< on the largest centroid displacement of an iteration
    int workers = 1;
};

/// k-means partition of the unit sphere. Centroids are plain Euclidean means of
/// L2-normalized training vectors and are not projected back onto the sphere.
struct ClusterModel {
    EmbeddingMatrixT<double> centroids;  ///< k x dim
    std::uint64_t seed = 0;
    int iterations_run = 0;
    bool converged = false;
    std::vector<double> inertia_history;  ///< one entry per assignment step

    int k() const noexcept { return static_cast<int>(centroids.rows()); }
    Eigen::Index dim() const noexcept { return centroids.cols(); }
};

/// Rows scaled to unit length, computed in double precision.
template <typename Derived>
EmbeddingMatrixT<double> l2_normalize_rows(const Eigen::MatrixBase<Derived>& vectors)
{
    EmbeddingMatrixT<double> out = vectors.template cast<double>();
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double* row = &out(r, 0);
        const double norm = std::sqrt(detail::dot(row, row, out.cols()));
        if (norm == 0.0)
            throw NumericError("row " + std::to_string(r + 1) + " has zero norm and cannot be normalized");
        out.row(r) /= norm;
    }
    return out;
}

/// Lloyd iterations from k-means++ seeding on rows that are already unit length.
ClusterModel fit_kmeans_unit(const EmbeddingMatrixT<double>& unit_rows, const KMeansOptions& options);

template <typename Derived>
ClusterModel fit_kmeans(const Eigen::MatrixBase<Derived>& vectors, const KMeansOptions& options)
{
    return fit_kmeans_unit(l2_normalize_rows(vectors), options);
}

inline ClusterModel fit_kmeans(const TrainSplit& train, const KMeansOptions& options)
{
    return fit_kmeans(train.data().vectors(), options);
}

/// Nearest centroid to a unit-length vector; ties go to the lowest cluster id.
int nearest_centroid(const ClusterModel& model, const double* unit_vector);

/// Nearest centroid after L2-normalizing `vector`.
template <typename Derived>
int assign(const ClusterModel& model, const Eigen::MatrixBase<Derived>& vector)
{
    if (vector.size() != model.dim())
        throw DataError("assign: vector has dimension " + std::to_string(vector.size()) + ", model expects " +
                        std::to_string(model.dim()));
    const EmbeddingMatrixT<double> unit = l2_normalize_rows(vector.derived().reshaped().transpose());
    return nearest_centroid(model, unit.data());
}

/// `assign` for every row of `vectors`.
std::vector<int> assign_all(const ClusterModel& model, const EmbeddingMatrix& vectors, int workers = 1);

/// Sum of squared distances from each unit row to its nearest centroid.
double inertia(const ClusterModel& model, const EmbeddingMatrixT<double>& unit_rows);

}  // namespace fairnorm
