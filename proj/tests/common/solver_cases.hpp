#pragma once

#include <cmath>

#include "forktms/solver/solver.hpp"

namespace forktms::testing {

inline constexpr double kOmega = 2.0 * 3.14159265358979323846 * 1e4;

struct NullResult {
  double max_e_ratio = 0.0;  // max|E| / (omega |A0|)
  double residual = 0.0;
  long iterations = 0;
};

// Homogeneous cube with constant A0: the exact field is zero.
inline NullResult null_field(int n, const solver::SolverOptions& opts = {}) {
  solver::ConductivityVolume sigma({n, n, n}, {1, 1, 1}, 0.33);
  coil::VectorField a0({n, n, n}, {1, 1, 1});
  const Vec3 a{2e-7, -1e-7, 3e-7};
  for (std::size_t i = 0; i < a0.size(); ++i) a0.set(i, a);
  auto psi = solver::solve_potential(sigma, a0, kOmega, opts);
  auto e = solver::electric_field(psi, a0, kOmega, &sigma);
  NullResult r;
  for (std::size_t i = 0; i < e.size(); ++i) r.max_e_ratio = std::max(r.max_e_ratio, norm(e.at(i)));
  r.max_e_ratio /= kOmega * norm(a);
  r.residual = psi.log.relative_residual;
  r.iterations = psi.log.iterations;
  return r;
}

// Symmetric-gauge potential of a uniform B about the point c (metres).
inline Vec3 uniform_b_potential(const Vec3& b, const Vec3& r, const Vec3& c) { return 0.5 * cross(b, r - c); }

// Voxelized sphere in uniform B: RMS error of E against -j omega (B x r)/2
// over voxels deeper than `shell` voxels, relative to the analytic RMS.
inline double sphere_rms_error(int n = 64, double radius = 20.0, double shell = 2.0) {
  const volume::Spacing sp{1, 1, 1};
  solver::ConductivityVolume sigma({n, n, n}, sp, 0.0);
  coil::VectorField a0({n, n, n}, sp);
  const Vec3 b{0.3, -0.2, 1.0};
  const double c = n / 2.0;
  const Vec3 centre{c * 1e-3, c * 1e-3, c * 1e-3};
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const Vec3 r{(i + 0.5) * 1e-3, (j + 0.5) * 1e-3, (k + 0.5) * 1e-3};
        const std::size_t idx = sigma.index(i, j, k);
        if (norm(r - centre) * 1e3 <= radius) sigma.data()[idx] = 0.5;
        a0.set(idx, uniform_b_potential(b, r, centre));
      }
    }
  }
  auto psi = solver::solve_potential(sigma, a0, kOmega);
  auto e = solver::electric_field(psi, a0, kOmega, &sigma);
  double num = 0.0, den = 0.0;
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const Vec3 d{i + 0.5 - c, j + 0.5 - c, k + 0.5 - c};
        if (norm(d) > radius - shell) continue;
        const std::size_t idx = sigma.index(i, j, k);
        const Vec3 expect = kOmega * a0.at(idx);
        num += dot(e.at(idx) - expect, e.at(idx) - expect);
        den += dot(expect, expect);
      }
    }
  }
  return std::sqrt(num / den);
}

}  // namespace forktms::testing
