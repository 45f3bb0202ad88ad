#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "forktms/error.hpp"

namespace forktms::volume {

inline constexpr int kTissueCount = 13;
inline constexpr std::uint8_t kBackground = 0;

struct Dims {
  int nx = 0, ny = 0, nz = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  bool operator==(const Dims&) const = default;
};

// Millimetres per voxel along x, y, z.
struct Spacing {
  double sx = 1.0, sy = 1.0, sz = 1.0;
  bool operator==(const Spacing&) const = default;
};

// Dense x-fastest voxel grid. x indexes sagittal slices, y coronal, z axial.
template <typename T>
class Volume {
 public:
  using value_type = T;

  Volume() = default;
  Volume(Dims dims, Spacing spacing, T fill = T{}) : dims_(dims), spacing_(spacing) {
    validate(dims, spacing);
    data_.assign(dims.count(), fill);
  }
  Volume(Dims dims, Spacing spacing, std::vector<T> data)
      : dims_(dims), spacing_(spacing), data_(std::move(data)) {
    validate(dims, spacing);
    if (data_.size() != dims.count()) throw Error("size mismatch: voxel payload does not match dims");
  }

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_.nx) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims_.ny) * static_cast<std::size_t>(z));
  }
  bool contains(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_.nx && y < dims_.ny && z < dims_.nz;
  }

  T operator()(int x, int y, int z) const { return data_[index(x, y, z)]; }
  T& operator()(int x, int y, int z) { return data_[index(x, y, z)]; }

  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

  bool same_grid(const Volume& other) const { return dims_ == other.dims_ && spacing_ == other.spacing_; }
  template <typename U>
  bool same_grid(const Volume<U>& other) const {
    return dims_ == other.dims() && spacing_ == other.spacing();
  }

 private:
  static void validate(Dims d, Spacing s) {
    if (d.nx < 1 || d.ny < 1 || d.nz < 1) throw Error("invalid dims: every extent must be >= 1");
    if (!(s.sx > 0.0 && s.sy > 0.0 && s.sz > 0.0)) throw Error("invalid spacing: must be > 0");
  }

  Dims dims_{};
  Spacing spacing_{};
  std::vector<T> data_;
};

using ScalarVolume = Volume<float>;
using LabelVolume = Volume<std::uint8_t>;

/// Throws unless every voxel holds an ID in [0, 13].
void check_labels(const LabelVolume& labels);

/// Z-scores the intensities, then rescales the result onto [0, 1].
/// Throws "constant volume" when the variance is zero.
ScalarVolume normalize_mri(const ScalarVolume& v);

enum class Axis { Axial, Sagittal, Coronal };

const char* axis_name(Axis axis);
Axis parse_axis(const std::string& name);
inline constexpr std::array<Axis, 3> kAllAxes = {Axis::Axial, Axis::Sagittal, Axis::Coronal};

// In-plane layout per axis (pixel (u, v), row-major v * width + u):
//   axial    fixed z: u = x, v = y
//   sagittal fixed x: u = y, v = z
//   coronal  fixed y: u = x, v = z
template <typename T>
struct Slice2D {
  Axis axis = Axis::Axial;
  int index = 0;
  int width = 0;
  int height = 0;
  std::vector<T> data;

  T at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
  T& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
};

/// Number of slices along `axis` and the in-plane (width, height).
int slice_count(const Dims& dims, Axis axis);
std::array<int, 2> slice_extent(const Dims& dims, Axis axis);

/// Maps in-plane pixel (u, v) of slice k to voxel (x, y, z).
std::array<int, 3> slice_to_voxel(Axis axis, int k, int u, int v);

template <typename T>
Slice2D<T> extract_slice(const Volume<T>& v, Axis axis, int k);

/// Stacks one slice per index into a volume. Slices may arrive in any order.
template <typename T>
Volume<T> assemble_slices(const std::vector<Slice2D<T>>& slices, Axis axis, Spacing spacing);

LabelVolume assemble_labels(const std::vector<Slice2D<std::uint8_t>>& slices, Axis axis,
                            Spacing spacing);

}  // namespace forktms::volume
