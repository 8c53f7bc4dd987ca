#pragma once

#include "fairnorm/dataset.hpp"

#include <cstdint>
#include <vector>

namespace fairnorm {

/// Synthetic population on the unit sphere with a per-group noise knob.
///
/// Group centers are orthonormal; subject centers scatter around their group
/// center by `group_dispersion`, samples around their subject center by
/// `intra_noise[group]`. Both scales multiply an isotropic Gaussian with unit
/// expected norm, N(0, I/dim), and every point is renormalized onto the sphere.
struct SynthConfig {
    int dim = 64;
    int n_groups = 2;
    int subjects_per_group = 100;
    int samples_per_subject = 4;
    std::vector<double> intra_noise{0.1, 0.3};
    double group_dispersion = 0.3;
    std::uint64_t seed = 0;
};

void validate(const SynthConfig& config);

/// Samples carry attribute "group" = group index and subject IDs `g<G>_s<S>`.
EmbeddingDataset generate(const SynthConfig& config);

}  // namespace fairnorm
