#include "forktms/forknet/segment.hpp"

#include <algorithm>
#include <cmath>

namespace forktms::forknet {
namespace {

nn::Tensor<float> stack_images(const std::vector<const FloatSlice*>& slices, int extent) {
  nn::Tensor<float> x(static_cast<int>(slices.size()), 1, extent, extent);
  for (std::size_t b = 0; b < slices.size(); ++b) {
    const auto& s = *slices[b];
    if (s.width != extent || s.height != extent) {
      throw Error("shape mismatch: slice " + std::to_string(s.width) + "x" + std::to_string(s.height) +
                  " vs network extent " + std::to_string(extent));
    }
    std::copy(s.data.begin(), s.data.end(), x.plane(static_cast<int>(b), 0));
  }
  return x;
}

// Probability maps for batch member b, one per output channel.
std::vector<FloatSlice> maps_for(const std::vector<nn::Tensor<float>>& outputs, int b, const FloatSlice& like) {
  std::vector<FloatSlice> maps;
  for (const auto& out : outputs) {
    for (int c = 0; c < out.c(); ++c) {
      FloatSlice m{like.axis, like.index, like.width, like.height, std::vector<float>(out.shape().plane())};
      const float* p = out.plane(b, c);
      for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = std::exp(p[i]);
      maps.push_back(std::move(m));
    }
  }
  return maps;
}

}  // namespace

std::vector<FloatSlice> segment_slice(Network<float>& net, const FloatSlice& mri, Mode mode) {
  const auto x = stack_images({&mri}, net.config().extent);
  const auto outputs = net.forward(x, mode);
  return maps_for(outputs, 0, mri);
}

LabelSlice argmax_labels(const std::vector<FloatSlice>& maps, const ArgmaxOptions& options) {
  if (maps.empty()) throw Error("argmax_labels: empty map set");
  const auto& first = maps.front();
  for (const auto& m : maps) {
    if (m.width != first.width || m.height != first.height || m.data.size() != first.data.size()) {
      throw Error("argmax_labels: maps differ in shape");
    }
  }
  if (maps.size() > 255) throw Error("argmax_labels: too many maps for 8-bit labels");
  LabelSlice out{first.axis, first.index, first.width, first.height, std::vector<std::uint8_t>(first.data.size())};
  for (std::size_t i = 0; i < first.data.size(); ++i) {
    std::size_t best = 0;
    float best_value = maps[0].data[i];
    for (std::size_t n = 1; n < maps.size(); ++n) {
      if (maps[n].data[i] > best_value) {
        best_value = maps[n].data[i];
        best = n;
      }
    }
    if (options.background_rule && best_value < options.threshold) {
      out.data[i] = 0;
    } else {
      out.data[i] = static_cast<std::uint8_t>(best + 1);
    }
  }
  return out;
}

volume::LabelVolume segment_volume(Network<float>& net, const volume::ScalarVolume& mri, volume::Axis axis,
                                   const ArgmaxOptions& options, int batch, Mode mode) {
  const int count = volume::slice_count(mri.dims(), axis);
  batch = std::max(1, batch);
  std::vector<LabelSlice> labels;
  labels.reserve(count);
  for (int k0 = 0; k0 < count; k0 += batch) {
    std::vector<FloatSlice> slices;
    for (int k = k0; k < std::min(count, k0 + batch); ++k) slices.push_back(volume::extract_slice(mri, axis, k));
    std::vector<const FloatSlice*> ptrs;
    for (const auto& s : slices) ptrs.push_back(&s);
    const auto x = stack_images(ptrs, net.config().extent);
    const auto outputs = net.forward(x, mode);
    for (std::size_t b = 0; b < slices.size(); ++b) {
      labels.push_back(argmax_labels(maps_for(outputs, static_cast<int>(b), slices[b]), options));
    }
  }
  return volume::assemble_labels(labels, axis, mri.spacing());
}

}  // namespace forktms::forknet
