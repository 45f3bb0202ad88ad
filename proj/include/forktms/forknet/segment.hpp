#pragma once

#include <cstdint>
#include <vector>

#include "forktms/forknet/network.hpp"
#include "forktms/volume/volume.hpp"

namespace forktms::forknet {

using FloatSlice = volume::Slice2D<float>;
using LabelSlice = volume::Slice2D<std::uint8_t>;

struct ArgmaxOptions {
  bool background_rule = false;  // emit 0 where every map is below the threshold
  double threshold = 0.5;
};

/// Probability maps (one per output channel/track, values in [0, 1]) for a
/// single slice.
std::vector<FloatSlice> segment_slice(Network<float>& net, const FloatSlice& mri, nn::Mode mode = nn::Mode::Infer);

/// Per pixel, label n (1-based) of the largest map; ties go to the lowest n.
LabelSlice argmax_labels(const std::vector<FloatSlice>& maps, const ArgmaxOptions& options = {});

/// Segments every slice of `mri` along `axis` and restacks the labels.
volume::LabelVolume segment_volume(Network<float>& net, const volume::ScalarVolume& mri, volume::Axis axis,
                                   const ArgmaxOptions& options = {}, int batch = 8,
                                   nn::Mode mode = nn::Mode::Infer);

}  // namespace forktms::forknet
