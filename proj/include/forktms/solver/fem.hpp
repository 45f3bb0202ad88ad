#pragma once

#include <array>
#include <vector>

#include "forktms/coil/coil.hpp"
#include "forktms/solver/conductivity.hpp"

namespace forktms::solver {

/// 8x8 stiffness of a unit-conductivity trilinear hexahedron with edge
/// lengths (hx, hy, hz) in metres; local node a = dx + 2*dy + 4*dz.
std::array<double, 64> hex_stiffness(double hx, double hy, double hz);

/// Integral of grad N_a over the element, per local node.
std::array<Vec3, 8> hex_gradient_integrals(double hx, double hy, double hz);

// Matrix-free Galerkin operator K psi = sum_e sigma_e K_ref psi_e on the
// (nx+1)(ny+1)(nz+1) node lattice of a conductivity volume. Nodes touching no
// conducting element are inactive and stay zero.
class FemOperator {
 public:
  explicit FemOperator(const ConductivityVolume& sigma);

  std::size_t node_count() const { return nodes_; }
  std::array<int, 3> node_dims() const { return {nx_ + 1, ny_ + 1, nz_ + 1}; }
  std::size_t node_index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(nx_ + 1) * (j + static_cast<std::size_t>(ny_ + 1) * k);
  }

  /// y = K x
  void apply(const std::vector<double>& x, std::vector<double>& y) const;
  const std::vector<double>& diagonal() const { return diag_; }
  const std::vector<std::uint8_t>& active() const { return active_; }

  /// Weak divergence of sigma * A0: f_a = sum_e sigma_e A0_e . int grad N_a.
  std::vector<double> rhs(const coil::VectorField& a0) const;

  /// Connected conducting components (elements sharing a node are
  /// connected); node_component()[n] is -1 for inactive nodes.
  int component_count() const { return components_; }
  const std::vector<int>& node_component() const { return node_component_; }

  /// Removes the per-component mean over active nodes.
  void project_out_constants(std::vector<double>& v) const;

  /// Dense K for small grids (tests only).
  std::vector<double> dense() const;

  const ConductivityVolume& sigma() const { return sigma_; }
  const std::array<double, 64>& stiffness() const { return kref_; }

 private:
  const ConductivityVolume& sigma_;
  int nx_, ny_, nz_;
  std::size_t nodes_;
  std::array<double, 64> kref_;
  std::vector<double> diag_;
  std::vector<std::uint8_t> active_;
  std::vector<int> node_component_;
  int components_ = 0;
};

}  // namespace forktms::solver
