#pragma once

#include <cstdint>

#include "forktms/volume/volume.hpp"

namespace forktms::volume {

struct PhantomConfig {
  double noise = 0.005;        // std-dev of additive Gaussian noise, pre-normalization units
  Spacing spacing{1.0, 1.0, 1.0};
  double shell_fraction = 0.065;  // thickness of each shell, as a fraction of the semi-axis
};

struct Phantom {
  ScalarVolume mri;
  LabelVolume labels;
};

/// Intensity mean assigned to tissue `id` before noise; background is 0.
double phantom_tissue_mean(int id);

/// Concentric ellipsoidal shells: tissue 1 outermost through tissue 13 at the
/// core, air outside. Geometry jitter and noise are drawn from `seed`.
Phantom generate_phantom(std::uint64_t seed, Dims dims, const PhantomConfig& config = {});

}  // namespace forktms::volume
