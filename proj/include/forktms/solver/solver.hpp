#pragma once

#include <string>
#include <vector>

#include "forktms/coil/coil.hpp"
#include "forktms/solver/conductivity.hpp"

namespace forktms::solver {

struct SolverOptions {
  double tol = 1e-6;          // relative residual ||K psi - f|| / ||f||
  long max_iter = -1;         // -1: 1000 * (node count)^(1/3)
};

struct SolveLog {
  long iterations = 0;
  int restarts = 0;
  int components = 0;
  double relative_residual = 0.0;      // recomputed from the returned psi
  std::vector<double> residual_trace;  // smoothed relative residual per iteration
  std::string text() const;
};

// Node-centred potential psi on the (nx+1)(ny+1)(nz+1) corner lattice with
// phi = -j omega psi. Inactive nodes hold 0; every conducting component has
// zero mean over its nodes.
struct PotentialField {
  volume::Dims voxel_dims;
  volume::Spacing spacing;
  std::vector<double> psi;
  std::vector<std::uint8_t> active;
  SolveLog log;

  std::size_t node_index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(voxel_dims.nx + 1) * (j + static_cast<std::size_t>(voxel_dims.ny + 1) * k);
  }
};

/// Solves div(sigma grad psi) = div(sigma A0) with J.n = 0 on the conductor
/// boundary by Jacobi-preconditioned CG. Throws on non-convergence or an
/// all-air volume.
PotentialField solve_potential(const ConductivityVolume& sigma, const coil::VectorField& a0, double omega,
                               const SolverOptions& options = {});

/// E = -j omega (A0 - grad psi). The returned field stores the real
/// amplitude omega (A0 - grad psi), i.e. E = -j * stored, with grad psi the
/// element gradient at each voxel centre. Air voxels are 0.
coil::VectorField electric_field(const PotentialField& psi, const coil::VectorField& a0, double omega,
                                 const ConductivityVolume* sigma = nullptr);

/// ROI voxels whose reference magnitude exceeds `fraction` of the ROI
/// maximum (mask value 1). Throws on an empty ROI.
volume::LabelVolume hotspot_mask(const volume::ScalarVolume& e_ref, const volume::LabelVolume& roi,
                                 double fraction = 0.7);

}  // namespace forktms::solver
