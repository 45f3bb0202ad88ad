#pragma once

#include <cstdint>

#include "forktms/volume/volume.hpp"

namespace forktms::fusion {

using volume::LabelVolume;

// Label volumes from the axial, sagittal and coronal networks, voxel-aligned.
struct ViewTriple {
  const LabelVolume& alpha;
  const LabelVolume& beta;
  const LabelVolume& gamma;
};

enum class FuzzyPolicy {
  Neighborhood,   // most frequent label around the voxel over all three views
  AxialPriority,  // take the axial label
};

enum class WindowShape {
  Cube,          // window^3 cube in every view
  ViewPlane,     // window^2 square in each view's own slicing plane
};

struct FusionOptions {
  int window = 3;
  FuzzyPolicy fuzzy = FuzzyPolicy::Neighborhood;
  WindowShape shape = WindowShape::Cube;
  bool head_mask = false;  // restrict statistics to voxels labelled in any view
};

// Voxel shares (percent) with three-way agreement, exactly two agreeing, and
// full disagreement ("fuzzy").
struct AgreementStats {
  double all_three = 0.0;
  double two = 0.0;
  double fuzzy = 0.0;
  std::size_t voxels = 0;
};

struct FusionResult {
  LabelVolume fused;
  AgreementStats stats;
};

/// Throws "misaligned dims" unless all three share dims and spacing.
void check_aligned(const ViewTriple& t);

/// Most frequent label over the (boundary-clamped) window around (x, y, z),
/// pooled across the three views; ties go to the lowest label ID.
std::uint8_t neighborhood_vote(const ViewTriple& t, int x, int y, int z, int window,
                               WindowShape shape = WindowShape::Cube);

/// Per voxel: unanimous or two-way majority label; full disagreement is
/// resolved per `options.fuzzy`. Statistics are taken before resolution.
FusionResult fuse_views(const ViewTriple& t, const FusionOptions& options = {});

}  // namespace forktms::fusion
