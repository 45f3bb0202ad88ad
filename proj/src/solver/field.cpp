#include <algorithm>

#include "forktms/parallel.hpp"
#include "forktms/solver/solver.hpp"

namespace forktms::solver {

coil::VectorField electric_field(const PotentialField& psi, const coil::VectorField& a0, double omega,
                                 const ConductivityVolume* sigma) {
  const auto& d = psi.voxel_dims;
  if (a0.dims != d) throw Error("dims mismatch: vector potential vs potential grid");
  if (sigma && sigma->dims() != d) throw Error("dims mismatch: conductivity vs potential grid");
  const double hx = psi.spacing.sx * 1e-3, hy = psi.spacing.sy * 1e-3, hz = psi.spacing.sz * 1e-3;
  const std::size_t oy = static_cast<std::size_t>(d.nx + 1);
  const std::size_t oz = oy * static_cast<std::size_t>(d.ny + 1);
  coil::VectorField e(d, psi.spacing);
  const auto& p = psi.psi;
  parallel_for(0, d.nz, [&](int lo, int hi) {
    for (int k = lo; k < hi; ++k)
      for (int j = 0; j < d.ny; ++j)
        for (int i = 0; i < d.nx; ++i) {
          const std::size_t v = static_cast<std::size_t>(i) + static_cast<std::size_t>(d.nx) * (j + static_cast<std::size_t>(d.ny) * k);
          const std::size_t n = psi.node_index(i, j, k);
          bool conducting = sigma ? sigma->data()[v] > 0.0 : true;
          if (!sigma)
            for (std::size_t c : {n, n + 1, n + oy, n + oy + 1, n + oz, n + oz + 1, n + oz + oy, n + oz + oy + 1})
              conducting = conducting && psi.active[c];
          if (!conducting) continue;
          const double p000 = p[n], p100 = p[n + 1], p010 = p[n + oy], p110 = p[n + oy + 1];
          const double p001 = p[n + oz], p101 = p[n + oz + 1], p011 = p[n + oz + oy], p111 = p[n + oz + oy + 1];
          const double gx = ((p100 - p000) + (p110 - p010) + (p101 - p001) + (p111 - p011)) / (4.0 * hx);
          const double gy = ((p010 - p000) + (p110 - p100) + (p011 - p001) + (p111 - p101)) / (4.0 * hy);
          const double gz = ((p001 - p000) + (p101 - p100) + (p011 - p010) + (p111 - p110)) / (4.0 * hz);
          e.x[v] = omega * (a0.x[v] - gx);
          e.y[v] = omega * (a0.y[v] - gy);
          e.z[v] = omega * (a0.z[v] - gz);
        }
  });
  return e;
}

volume::LabelVolume hotspot_mask(const volume::ScalarVolume& e_ref, const volume::LabelVolume& roi,
                                 double fraction) {
  if (!e_ref.same_grid(roi)) throw Error("dims mismatch: field vs ROI");
  const auto& m = roi.data();
  const auto& f = e_ref.data();
  bool any = false;
  float peak = 0.0f;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) {
      any = true;
      peak = std::max(peak, f[i]);
    }
  if (!any) throw Error("empty ROI: no voxels to threshold");
  const double cut = fraction * peak;
  volume::LabelVolume out(roi.dims(), roi.spacing(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = (m[i] && f[i] > cut) ? 1 : 0;
  return out;
}

}  // namespace forktms::solver
