#pragma once

#include <array>
#include <string>
#include <vector>

#include "forktms/volume/volume.hpp"

namespace forktms::metrics {

// Masks are label volumes where any nonzero voxel is a member.
using Mask = volume::LabelVolume;

Mask label_mask(const volume::LabelVolume& labels, int id);

/// 2|A n B| / (|A| + |B|) * 100. Throws when both are empty.
double dice(const Mask& a, const Mask& b);

/// Squared Euclidean distance (mm^2) from every voxel to the nearest member
/// of `mask`; +inf everywhere if the mask is empty.
std::vector<double> squared_distance_transform(const Mask& mask);

/// max over a in A of the distance to the nearest b in B, in mm.
double hausdorff_directed(const Mask& a, const Mask& b);
/// max(HD(A, B), HD(B, A)).
double hausdorff_symmetric(const Mask& a, const Mask& b);

/// 100 * mean over the region of |ref - test|. Unless `raw`, each field is
/// first divided by its own maximum over `norm_roi` (or the region); a test
/// field that vanishes there stays zero. A vanishing reference throws.
double mae(const volume::ScalarVolume& ref, const volume::ScalarVolume& test, const Mask& region,
           bool raw = false, const Mask* norm_roi = nullptr);

/// MAE restricted to hotspot_mask(ref, roi, fraction), normalized over roi.
double mae_hotspot(const volume::ScalarVolume& ref, const volume::ScalarVolume& test, const Mask& roi,
                   double fraction = 0.7, bool raw = false);

struct TissueScore {
  int id = 0;
  std::size_t truth_voxels = 0;
  std::size_t test_voxels = 0;
  double dice = 0.0;            // NaN when undefined
  double hd_directed = 0.0;     // test -> truth, mm; NaN when either is empty
  double hd_symmetric = 0.0;
};

struct MetricsReport {
  std::string subject;
  std::string variant;  // alpha, beta, gamma, psi
  std::vector<TissueScore> tissues;
  double mae = -1.0;    // negative when no field comparison ran
  double mae_hot = -1.0;
  double mae_self = -1.0;

  std::string text() const;
  std::string key_values() const;
};

/// Per-tissue Dice and Hausdorff for labels 1..13.
MetricsReport evaluate_labels(const volume::LabelVolume& truth, const volume::LabelVolume& test);

/// Mean Dice over tissues whose truth has at least `min_voxels` voxels.
double mean_dice(const MetricsReport& report, std::size_t min_voxels = 0);

}  // namespace forktms::metrics
