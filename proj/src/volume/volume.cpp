#include "forktms/volume/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace forktms::volume {

void check_labels(const LabelVolume& labels) {
  for (auto id : labels.data()) {
    if (id > kTissueCount) throw Error("invalid label ID " + std::to_string(id) + " (expected 0..13)");
  }
}

ScalarVolume normalize_mri(const ScalarVolume& v) {
  const auto& in = v.data();
  const double n = static_cast<double>(in.size());
  double mean = 0.0;
  for (float x : in) mean += x;
  mean /= n;
  double var = 0.0;
  for (float x : in) var += (x - mean) * (x - mean);
  var /= n;
  if (!(var > 0.0)) throw Error("constant volume: zero variance, cannot normalize");
  const double stddev = std::sqrt(var);

  double zmin = INFINITY, zmax = -INFINITY;
  std::vector<double> z(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    z[i] = (in[i] - mean) / stddev;
    zmin = std::min(zmin, z[i]);
    zmax = std::max(zmax, z[i]);
  }
  if (!(zmax > zmin)) throw Error("constant volume: zero variance, cannot normalize");

  std::vector<float> out(in.size());
  const double range = zmax - zmin;
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<float>((z[i] - zmin) / range);
  return ScalarVolume(v.dims(), v.spacing(), std::move(out));
}

const char* axis_name(Axis axis) {
  switch (axis) {
    case Axis::Axial: return "axial";
    case Axis::Sagittal: return "sagittal";
    case Axis::Coronal: return "coronal";
  }
  return "?";
}

Axis parse_axis(const std::string& name) {
  if (name == "axial" || name == "alpha") return Axis::Axial;
  if (name == "sagittal" || name == "beta") return Axis::Sagittal;
  if (name == "coronal" || name == "gamma") return Axis::Coronal;
  throw Error("unknown slicing axis '" + name + "'");
}

int slice_count(const Dims& dims, Axis axis) {
  switch (axis) {
    case Axis::Axial: return dims.nz;
    case Axis::Sagittal: return dims.nx;
    case Axis::Coronal: return dims.ny;
  }
  return 0;
}

std::array<int, 2> slice_extent(const Dims& dims, Axis axis) {
  switch (axis) {
    case Axis::Axial: return {dims.nx, dims.ny};
    case Axis::Sagittal: return {dims.ny, dims.nz};
    case Axis::Coronal: return {dims.nx, dims.nz};
  }
  return {0, 0};
}

std::array<int, 3> slice_to_voxel(Axis axis, int k, int u, int v) {
  switch (axis) {
    case Axis::Axial: return {u, v, k};
    case Axis::Sagittal: return {k, u, v};
    case Axis::Coronal: return {u, k, v};
  }
  return {0, 0, 0};
}

template <typename T>
Slice2D<T> extract_slice(const Volume<T>& v, Axis axis, int k) {
  if (k < 0 || k >= slice_count(v.dims(), axis)) {
    throw Error("index out of range: slice " + std::to_string(k) + " along " + axis_name(axis));
  }
  const auto [w, h] = slice_extent(v.dims(), axis);
  Slice2D<T> s{axis, k, w, h, std::vector<T>(static_cast<std::size_t>(w) * h)};
  for (int pv = 0; pv < h; ++pv) {
    for (int pu = 0; pu < w; ++pu) {
      const auto [x, y, z] = slice_to_voxel(axis, k, pu, pv);
      s.at(pu, pv) = v(x, y, z);
    }
  }
  return s;
}

template <typename T>
Volume<T> assemble_slices(const std::vector<Slice2D<T>>& slices, Axis axis, Spacing spacing) {
  if (slices.empty()) throw Error("ragged slice set: no slices");
  const int w = slices.front().width, h = slices.front().height;
  const int count = static_cast<int>(slices.size());
  Dims dims{};
  switch (axis) {
    case Axis::Axial: dims = {w, h, count}; break;
    case Axis::Sagittal: dims = {count, w, h}; break;
    case Axis::Coronal: dims = {w, count, h}; break;
  }
  Volume<T> out(dims, spacing);
  std::vector<bool> seen(count, false);
  for (const auto& s : slices) {
    if (s.axis != axis) throw Error("ragged slice set: slice axis does not match assembly axis");
    if (s.width != w || s.height != h || s.data.size() != static_cast<std::size_t>(w) * h) {
      throw Error("ragged slice set: non-uniform slice shape");
    }
    if (s.index < 0 || s.index >= count) throw Error("index out of range: slice index " + std::to_string(s.index));
    if (seen[s.index]) throw Error("ragged slice set: duplicate slice index " + std::to_string(s.index));
    seen[s.index] = true;
    for (int pv = 0; pv < h; ++pv) {
      for (int pu = 0; pu < w; ++pu) {
        const auto [x, y, z] = slice_to_voxel(axis, s.index, pu, pv);
        out(x, y, z) = s.at(pu, pv);
      }
    }
  }
  return out;
}

LabelVolume assemble_labels(const std::vector<Slice2D<std::uint8_t>>& slices, Axis axis,
                            Spacing spacing) {
  auto out = assemble_slices(slices, axis, spacing);
  check_labels(out);
  return out;
}

template Slice2D<float> extract_slice(const Volume<float>&, Axis, int);
template Slice2D<std::uint8_t> extract_slice(const Volume<std::uint8_t>&, Axis, int);
template Volume<float> assemble_slices(const std::vector<Slice2D<float>>&, Axis, Spacing);
template Volume<std::uint8_t> assemble_slices(const std::vector<Slice2D<std::uint8_t>>&, Axis, Spacing);

}  // namespace forktms::volume
