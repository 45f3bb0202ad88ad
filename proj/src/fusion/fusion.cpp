#include "forktms/fusion/fusion.hpp"

#include <array>
#include <atomic>
#include <string>

#include "forktms/parallel.hpp"

namespace forktms::fusion {

void check_aligned(const ViewTriple& t) {
  if (!t.alpha.same_grid(t.beta) || !t.alpha.same_grid(t.gamma)) {
    throw Error("misaligned dims: the three view volumes must share dims and spacing");
  }
}

namespace {

void check_window(int window) {
  if (window < 3 || window % 2 == 0) throw Error("window must be odd and >= 3, got " + std::to_string(window));
}

void count_box(const LabelVolume& v, int x0, int x1, int y0, int y1, int z0, int z1, std::array<int, 256>& counts) {
  const auto& d = v.dims();
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  z0 = std::max(z0, 0);
  x1 = std::min(x1, d.nx - 1);
  y1 = std::min(y1, d.ny - 1);
  z1 = std::min(z1, d.nz - 1);
  for (int z = z0; z <= z1; ++z)
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) ++counts[v(x, y, z)];
}

}  // namespace

std::uint8_t neighborhood_vote(const ViewTriple& t, int x, int y, int z, int window, WindowShape shape) {
  check_window(window);
  if (!t.alpha.contains(x, y, z)) throw Error("voxel outside volume");
  const int r = window / 2;
  std::array<int, 256> counts{};
  if (shape == WindowShape::Cube) {
    for (const LabelVolume* v : {&t.alpha, &t.beta, &t.gamma}) count_box(*v, x - r, x + r, y - r, y + r, z - r, z + r, counts);
  } else {
    // axial plane: fixed z; sagittal: fixed x; coronal: fixed y
    count_box(t.alpha, x - r, x + r, y - r, y + r, z, z, counts);
    count_box(t.beta, x, x, y - r, y + r, z - r, z + r, counts);
    count_box(t.gamma, x - r, x + r, y, y, z - r, z + r, counts);
  }
  int best = 0;
  for (int label = 1; label < 256; ++label) {
    if (counts[label] > counts[best]) best = label;
  }
  return static_cast<std::uint8_t>(best);
}

FusionResult fuse_views(const ViewTriple& t, const FusionOptions& options) {
  check_aligned(t);
  check_window(options.window);
  const auto& d = t.alpha.dims();
  LabelVolume fused(d, t.alpha.spacing());
  std::atomic<std::size_t> n3{0}, n2{0}, n1{0};

  parallel_for(0, d.nz, [&](int z0, int z1) {
    std::size_t c3 = 0, c2 = 0, c1 = 0;
    for (int z = z0; z < z1; ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) {
          const std::size_t i = t.alpha.index(x, y, z);
          const auto a = t.alpha.data()[i], b = t.beta.data()[i], g = t.gamma.data()[i];
          const bool counted = !options.head_mask || a != 0 || b != 0 || g != 0;
          std::uint8_t out;
          if (a == b && b == g) {
            out = a;
            c3 += counted;
          } else if (a == b || a == g) {
            out = a;
            c2 += counted;
          } else if (b == g) {
            out = b;
            c2 += counted;
          } else {
            out = options.fuzzy == FuzzyPolicy::AxialPriority ? a
                                                               : neighborhood_vote(t, x, y, z, options.window, options.shape);
            c1 += counted;
          }
          fused.data()[i] = out;
        }
    n3 += c3;
    n2 += c2;
    n1 += c1;
  });

  FusionResult r{std::move(fused), {}};
  const std::size_t total = n3 + n2 + n1;
  r.stats.voxels = total;
  if (total > 0) {
    r.stats.all_three = 100.0 * static_cast<double>(n3) / static_cast<double>(total);
    r.stats.two = 100.0 * static_cast<double>(n2) / static_cast<double>(total);
    r.stats.fuzzy = 100.0 * static_cast<double>(n1) / static_cast<double>(total);
  }
  return r;
}

}  // namespace forktms::fusion
