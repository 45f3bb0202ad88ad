#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "forktms/geometry.hpp"
#include "forktms/volume/volume.hpp"

namespace forktms::coil {

inline constexpr double kMu0 = 4e-7 * 3.14159265358979323846;

// Placement in metres. The wings lie in the plane orthogonal to `normal`,
// side by side along normal x handle; the handle points along the junction.
struct CoilPose {
  Vec3 center{0.0, 0.0, 0.0};
  Vec3 normal{0.0, 0.0, 1.0};
  Vec3 handle{0.0, 1.0, 0.0};
};

enum class WingModel {
  Spiral,      // `turns` concentric loops, radii evenly spaced inner..outer
  SingleLoop,  // one loop per wing at the mean diameter
};

struct CoilParams {
  double outer_diameter = 0.097;
  double inner_diameter = 0.047;
  int turns = 5;
  int segments = 128;  // straight segments per turn
  double current = 1.0;
  double frequency = 10e3;
  WingModel model = WingModel::Spiral;
};

struct Segment {
  Vec3 a, b;
};

// Thin-wire polyline. wire[0, wing_split) is the first wing (counter-
// clockwise about the normal), the rest the second wing (clockwise).
struct Coil {
  CoilPose pose;
  CoilParams params;
  std::vector<Segment> wire;
  std::size_t wing_split = 0;
  Vec3 wing_center[2];
  Vec3 wing_axis;    // unit vector from wing 2 centre to wing 1 centre
  Vec3 handle_axis;  // orthonormalized handle direction

  double omega() const { return 2.0 * 3.14159265358979323846 * params.frequency; }
};

Coil build_figure_eight(const CoilPose& pose, const CoilParams& params = {});

/// A single circular loop of radius r (counter-clockwise about `normal`).
Coil build_loop(const Vec3& center, const Vec3& normal, double radius, int segments, double current = 1.0);

/// Coil restricted to one wing (0 or 1).
Coil wing_only(const Coil& coil, int wing);

// Real vector field on a voxel grid, x/y/z components stored separately,
// x-fastest like the volumes.
struct VectorField {
  volume::Dims dims;
  volume::Spacing spacing;
  std::vector<double> x, y, z;

  VectorField() = default;
  VectorField(volume::Dims d, volume::Spacing s)
      : dims(d), spacing(s), x(d.count(), 0.0), y(d.count(), 0.0), z(d.count(), 0.0) {}
  std::size_t size() const { return x.size(); }
  Vec3 at(std::size_t i) const { return {x[i], y[i], z[i]}; }
  void set(std::size_t i, const Vec3& v) { x[i] = v.x; y[i] = v.y; z[i] = v.z; }
  volume::ScalarVolume magnitude() const;
};

// Voxel (i, j, k) is centred at origin + (i + 0.5, j + 0.5, k + 0.5) * spacing,
// spacing in millimetres, origin in metres.
struct GridSpec {
  volume::Dims dims;
  volume::Spacing spacing;
  Vec3 origin;
};

Vec3 voxel_center(const GridSpec& grid, int i, int j, int k);

/// A0(r) = mu0 I / (4 pi) * sum over segments of dl / |r - midpoint|.
/// Throws "singular segment distance" if r lies within `guard` of a segment.
Vec3 vector_potential_at(const Coil& coil, const Vec3& r, double guard = 0.0);

/// A0 at every voxel centre; the guard defaults to half the voxel diagonal.
VectorField vector_potential(const Coil& coil, const GridSpec& grid, double guard = -1.0);

struct CoilSetup {
  CoilPose pose;
  CoilParams params;
};

/// Key/value pose file: center, normal, handle (x,y,z in metres), turns,
/// segments, current, frequency, and optionally outer_diameter,
/// inner_diameter, model=spiral|single-loop.
CoilSetup parse_coil_file(const std::string& text);
CoilSetup load_coil_file(const std::filesystem::path& path);
std::string format_coil_file(const CoilSetup& setup);

}  // namespace forktms::coil
