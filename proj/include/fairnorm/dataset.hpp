#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace fairnorm {

/// Row-major storage: one embedding per row.
template <typename Scalar>
using EmbeddingMatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using EmbeddingMatrix = EmbeddingMatrixT<float>;

/// Demographic labels, e.g. {"gender": "female"}. Only ever used for evaluation.
using Attributes = std::map<std::string, std::string>;

struct Sample {
    std::string sample_id;
    std::string subject_id;
    Attributes attributes;

    friend bool operator==(const Sample&, const Sample&) = default;
};

/// A validated, immutable set of embeddings with identity labels.
///
/// Invariants enforced on construction: every vector has `dim()` finite
/// components and sample IDs are unique. Vectors are stored exactly as given;
/// nothing here normalizes them.
class EmbeddingDataset {
public:
    EmbeddingDataset(std::vector<Sample> samples, EmbeddingMatrix vectors);

    std::size_t size() const noexcept { return samples_.size(); }
    Eigen::Index dim() const noexcept { return vectors_.cols(); }

    const Sample& sample(std::size_t i) const { return samples_[i]; }
    const std::vector<Sample>& samples() const noexcept { return samples_; }
    const EmbeddingMatrix& vectors() const noexcept { return vectors_; }
    auto vector(std::size_t i) const { return vectors_.row(static_cast<Eigen::Index>(i)); }

    /// Dense subject index of sample `i`, in order of first appearance.
    int subject_index(std::size_t i) const { return subject_of_[i]; }
    std::size_t subject_count() const noexcept { return subject_ids_.size(); }
    const std::vector<std::string>& subject_ids() const noexcept { return subject_ids_; }

    std::optional<std::size_t> find(const std::string& sample_id) const;

    /// Rows copied in the given order.
    EmbeddingDataset subset(std::span<const std::size_t> rows) const;

    /// All rows whose subject is in `subject_ids`, original order preserved.
    EmbeddingDataset select_subjects(std::span<const std::string> subject_ids) const;

    friend bool operator==(const EmbeddingDataset& a, const EmbeddingDataset& b);

private:
    std::vector<Sample> samples_;
    EmbeddingMatrix vectors_;
    std::vector<int> subject_of_;
    std::vector<std::string> subject_ids_;
    std::unordered_map<std::string, std::size_t> row_of_;
};

enum class DatasetFormat { csv, binary };

DatasetFormat parse_dataset_format(const std::string& name);

/// `.fne` / `.bin` map to binary, everything else to CSV.
DatasetFormat dataset_format_from_path(const std::filesystem::path& path);

EmbeddingDataset read_csv_dataset(std::istream& in);
void write_csv_dataset(const EmbeddingDataset& dataset, std::ostream& out);

EmbeddingDataset read_binary_dataset(std::istream& in);
void write_binary_dataset(const EmbeddingDataset& dataset, std::ostream& out);

EmbeddingDataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
void save_dataset(const EmbeddingDataset& dataset, const std::filesystem::path& path, DatasetFormat format);

/// Subject-disjoint partition for one cross-validation fold.
struct FoldSplit {
    std::vector<std::string> train_subject_ids;  // sorted
    std::vector<std::string> test_subject_ids;   // sorted
};

/// Shuffle subjects with `seed`, then deal them round-robin into `n_folds` test sets.
std::vector<FoldSplit> make_subject_disjoint_folds(const EmbeddingDataset& dataset, int n_folds,
                                                   std::uint64_t seed);

struct FoldData;

/// Data that a model may be fitted on. Only obtainable from a fold's train side
/// or by explicitly declaring a whole dataset to be training data.
class TrainSplit {
public:
    static TrainSplit whole(EmbeddingDataset dataset) { return TrainSplit(std::move(dataset)); }
    const EmbeddingDataset& data() const noexcept { return data_; }

private:
    explicit TrainSplit(EmbeddingDataset d) : data_(std::move(d)) {}
    EmbeddingDataset data_;

    friend FoldData materialize_fold(const EmbeddingDataset&, const FoldSplit&);
};

struct FoldData {
    TrainSplit train;
    EmbeddingDataset test;
};

FoldData materialize_fold(const EmbeddingDataset& dataset, const FoldSplit& split);

}  // namespace fairnorm
