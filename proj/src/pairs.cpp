#include "fairnorm/pairs.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <ostream>

namespace fairnorm {

PairScorer::PairScorer(const EmbeddingDataset& dataset)
    : vectors_(dataset.vectors().cast<double>()), norms_(dataset.vectors().rows())
{
    for (Eigen::Index r = 0; r < vectors_.rows(); ++r) {
        const double* row = &vectors_(r, 0);
        norms_[r] = std::sqrt(detail::dot(row, row, vectors_.cols()));
        if (norms_[r] == 0.0)
            throw NumericError("sample '" + dataset.sample(static_cast<std::size_t>(r)).sample_id +
                               "' has a zero-norm embedding");
    }
    subject_.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i)
        subject_.push_back(dataset.subject_index(i));
}

std::vector<std::size_t> resolve_subset(std::size_t dataset_size,
                                        const std::optional<std::vector<std::size_t>>& subset)
{
    std::vector<std::size_t> rows;
    if (!subset) {
        rows.resize(dataset_size);
        for (std::size_t i = 0; i < dataset_size; ++i)
            rows[i] = i;
        return rows;
    }
    rows = *subset;
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    if (!rows.empty() && rows.back() >= dataset_size)
        throw DataError("sample reference " + std::to_string(rows.back()) + " out of range");
    return rows;
}

std::vector<std::size_t> partition_pair_rows(std::size_t n_rows, int workers)
{
    const std::size_t w = std::max<std::size_t>(1, static_cast<std::size_t>(std::max(workers, 1)));
    std::vector<std::size_t> bounds{0};
    if (n_rows < 2 || w == 1) {
        bounds.push_back(n_rows);
        return bounds;
    }
    // Row a owns (n_rows - 1 - a) pairs; cut where the cumulative count crosses each share.
    const double total = 0.5 * static_cast<double>(n_rows) * static_cast<double>(n_rows - 1);
    double cumulative = 0.0;
    std::size_t next = 1;
    for (std::size_t a = 0; a < n_rows && next < w; ++a) {
        cumulative += static_cast<double>(n_rows - 1 - a);
        if (cumulative >= total * static_cast<double>(next) / static_cast<double>(w)) {
            bounds.push_back(a + 1);
            ++next;
        }
    }
    if (bounds.back() != n_rows)
        bounds.push_back(n_rows);
    return bounds;
}

std::vector<ScorePair> score_all_pairs(const EmbeddingDataset& dataset, int workers)
{
    const PairScorer scorer(dataset);
    const auto rows = resolve_subset(dataset.size(), std::nullopt);
    return accumulate_pairs(scorer, rows, workers, PairCollector{}).pairs;
}

ClusterScoreAccumulator::ClusterScoreAccumulator(std::span<const int> assignments, int k)
    : assignments_(assignments), sets_(static_cast<std::size_t>(std::max(k, 0)))
{
    if (k < 1)
        throw UsageError("cluster count must be positive");
    for (int c = 0; c < k; ++c)
        sets_[static_cast<std::size_t>(c)].cluster_id = c;
}

int ClusterScoreAccumulator::cluster_of(std::size_t sample) const
{
    if (sample >= assignments_.size())
        throw DataError("sample " + std::to_string(sample) + " has no cluster assignment");
    const int c = assignments_[sample];
    if (c < 0 || c >= static_cast<int>(sets_.size()))
        throw DataError("sample " + std::to_string(sample) + " is unassigned (cluster " + std::to_string(c) + ")");
    return c;
}

void ClusterScoreAccumulator::add(std::size_t i, std::size_t j, double score, bool genuine)
{
    const int ci = cluster_of(i);
    const int cj = cluster_of(j);
    auto push = [&](int c) {
        auto& set = sets_[static_cast<std::size_t>(c)];
        (genuine ? set.genuine_scores : set.impostor_scores).push_back(score);
    };
    push(ci);
    if (cj != ci)
        push(cj);
}

void ClusterScoreAccumulator::merge(ClusterScoreAccumulator&& other)
{
    for (std::size_t c = 0; c < sets_.size(); ++c) {
        auto& dst = sets_[c];
        auto& src = other.sets_[c];
        dst.genuine_scores.insert(dst.genuine_scores.end(), src.genuine_scores.begin(), src.genuine_scores.end());
        dst.impostor_scores.insert(dst.impostor_scores.end(), src.impostor_scores.begin(),
                                   src.impostor_scores.end());
    }
}

std::vector<ClusterScoreSets> collect_cluster_score_sets(std::span<const ScorePair> pairs,
                                                         std::span<const int> assignments, int k)
{
    ClusterScoreAccumulator acc(assignments, k);
    for (const auto& p : pairs)
        acc(p);
    return std::move(acc).release();
}

void write_scores_csv(std::span<const ScorePair> pairs, std::ostream& out)
{
    out << "i,j,raw_score,genuine\n";
    out.precision(17);
    for (const auto& p : pairs)
        out << p.i << ',' << p.j << ',' << p.raw_score << ',' << (p.genuine ? 1 : 0) << '\n';
}

namespace {

constexpr std::array<char, 4> kCacheMagic{'F', 'N', 'S', '1'};

template <typename T>
void put(std::ostream& out, T value)
{
    static_assert(std::endian::native == std::endian::little, "score cache assumes a little-endian host");
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path)
{
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (in.gcount() != sizeof(T))
        throw DataError("truncated score cache '" + path.string() + "'");
    return value;
}

}  // namespace

void save_score_cache(std::span<const ScorePair> pairs, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot open '" + path.string() + "' for writing");
    out.write(kCacheMagic.data(), kCacheMagic.size());
    put<std::uint64_t>(out, pairs.size());
    for (const auto& p : pairs) {
        put<std::uint32_t>(out, p.i);
        put<std::uint32_t>(out, p.j);
        put<double>(out, p.raw_score);
    }
    if (!out)
        throw DataError("write failed for '" + path.string() + "'");
}

std::vector<ScorePair> load_score_cache(const std::filesystem::path& path, const EmbeddingDataset& dataset)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open score cache '" + path.string() + "'");
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() != 4 || magic != kCacheMagic)
        throw DataError("'" + path.string() + "' is not a score cache");
    const auto count = get<std::uint64_t>(in, path);
    const std::uint64_t n = dataset.size();
    if (count != n * (n - 1) / 2)
        throw DataError("score cache '" + path.string() + "' does not match dataset size");
    std::vector<ScorePair> pairs;
    pairs.reserve(count);
    for (std::uint64_t r = 0; r < count; ++r) {
        ScorePair p;
        p.i = get<std::uint32_t>(in, path);
        p.j = get<std::uint32_t>(in, path);
        p.raw_score = get<double>(in, path);
        if (p.i >= p.j || p.j >= n)
            throw DataError("corrupt score cache '" + path.string() + "'");
        p.genuine = dataset.subject_index(p.i) == dataset.subject_index(p.j);
        pairs.push_back(p);
    }
    return pairs;
}

}  // namespace fairnorm
