#pragma once

#include <algorithm>
#include <cmath>

#include "forktms/coil/coil.hpp"

namespace forktms::testing {

// B_z on the axis of a loop in the xy plane from a central-difference curl
// of A0.
inline double curl_bz(const coil::Coil& loop, const Vec3& p, double h) {
  const auto ay_px = coil::vector_potential_at(loop, p + Vec3{h, 0, 0}).y;
  const auto ay_mx = coil::vector_potential_at(loop, p - Vec3{h, 0, 0}).y;
  const auto ax_py = coil::vector_potential_at(loop, p + Vec3{0, h, 0}).x;
  const auto ax_my = coil::vector_potential_at(loop, p - Vec3{0, h, 0}).x;
  return (ay_px - ay_mx) / (2 * h) - (ax_py - ax_my) / (2 * h);
}

inline double analytic_bz(double current, double radius, double z) {
  return coil::kMu0 * current * radius * radius / (2.0 * std::pow(radius * radius + z * z, 1.5));
}

// Worst relative on-axis error over z in [0, 3R].
inline double loop_axis_error(double radius = 0.05, int segments = 256, int samples = 31) {
  const auto loop = coil::build_loop({0, 0, 0}, {0, 0, 1}, radius, segments, 1.0);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double z = 3.0 * radius * s / (samples - 1);
    const double b = curl_bz(loop, {0, 0, z}, 1e-4 * radius);
    worst = std::max(worst, std::abs(b - analytic_bz(1.0, radius, z)) / analytic_bz(1.0, radius, z));
  }
  return worst;
}

}  // namespace forktms::testing
