#include "fairnorm/synth.hpp"

#include "fairnorm/error.hpp"

#include <Eigen/QR>

#include <cmath>
#include <random>

namespace fairnorm {

void validate(const SynthConfig& config)
{
    if (config.dim < 1 || config.n_groups < 1 || config.subjects_per_group < 1 || config.samples_per_subject < 1)
        throw UsageError("synth: dim, groups, subjects and samples must all be positive");
    if (config.intra_noise.size() != static_cast<std::size_t>(config.n_groups))
        throw UsageError("synth: need one intra_noise value per group (" + std::to_string(config.n_groups) +
                         "), got " + std::to_string(config.intra_noise.size()));
    for (double s : config.intra_noise)
        if (!(s > 0.0))
            throw UsageError("synth: intra_noise values must be positive");
    if (!(config.group_dispersion > 0.0))
        throw UsageError("synth: group_dispersion must be positive");
    if (config.n_groups > config.dim)
        throw UsageError("synth: cannot place " + std::to_string(config.n_groups) +
                         " orthonormal group centers in dimension " + std::to_string(config.dim));
}

EmbeddingDataset generate(const SynthConfig& config)
{
    validate(config);
    std::mt19937_64 rng(config.seed);
    // Unit expected squared norm, so noise scales mean the same in every dimension.
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(config.dim)));
    const Eigen::Index dim = config.dim;
    auto gaussian = [&] {
        Eigen::VectorXd v(dim);
        for (Eigen::Index d = 0; d < dim; ++d)
            v[d] = normal(rng);
        return v;
    };

    Eigen::MatrixXd raw(dim, config.n_groups);
    for (int g = 0; g < config.n_groups; ++g)
        raw.col(g) = gaussian();
    const Eigen::MatrixXd centers =
        Eigen::HouseholderQR<Eigen::MatrixXd>(raw).householderQ() * Eigen::MatrixXd::Identity(dim, config.n_groups);

    const auto total = static_cast<Eigen::Index>(config.n_groups) * config.subjects_per_group *
                       config.samples_per_subject;
    EmbeddingMatrix vectors(total, dim);
    std::vector<Sample> samples;
    samples.reserve(static_cast<std::size_t>(total));
    Eigen::Index row = 0;
    for (int g = 0; g < config.n_groups; ++g) {
        const double noise = config.intra_noise[static_cast<std::size_t>(g)];
        for (int s = 0; s < config.subjects_per_group; ++s) {
            const Eigen::VectorXd subject = (centers.col(g) + config.group_dispersion * gaussian()).normalized();
            const std::string subject_id = "g" + std::to_string(g) + "_s" + std::to_string(s);
            for (int m = 0; m < config.samples_per_subject; ++m) {
                const Eigen::VectorXd x = (subject + noise * gaussian()).normalized();
                vectors.row(row++) = x.cast<float>().transpose();
                samples.push_back(Sample{subject_id + "_" + std::to_string(m), subject_id,
                                         Attributes{{"group", std::to_string(g)}}});
            }
        }
    }
    return EmbeddingDataset(std::move(samples), std::move(vectors));
}

}  // namespace fairnorm
