#include "forktms/volume/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

namespace forktms::volume {

double phantom_tissue_mean(int id) {
  if (id <= 0) return 0.0;
  return 0.1 + 0.8 * static_cast<double>(id - 1) / static_cast<double>(kTissueCount - 1);
}

Phantom generate_phantom(std::uint64_t seed, Dims dims, const PhantomConfig& config) {
  if (dims.nx < 32 || dims.ny < 32 || dims.nz < 32) {
    throw Error("dims too small to fit 13 shells: every extent must be >= 32");
  }
  if (!(config.noise >= 0.0)) throw Error("phantom noise level must be >= 0");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::array<int, 3> n = {dims.nx, dims.ny, dims.nz};
  std::array<double, 3> center{}, semi{};
  for (int a = 0; a < 3; ++a) {
    center[a] = 0.5 * n[a] + (unit(rng) - 0.5) * 2.0;
    semi[a] = (0.5 * n[a] - 2.5) * (0.88 + 0.1 * unit(rng));
  }
  const double w = config.shell_fraction;
  if (*std::min_element(semi.begin(), semi.end()) * w < 0.5 || w * (kTissueCount - 1) >= 1.0) {
    throw Error("dims too small to fit 13 shells");
  }

  LabelVolume labels(dims, config.spacing, kBackground);
  for (int z = 0; z < dims.nz; ++z) {
    for (int y = 0; y < dims.ny; ++y) {
      for (int x = 0; x < dims.nx; ++x) {
        const double dx = (x + 0.5 - center[0]) / semi[0];
        const double dy = (y + 0.5 - center[1]) / semi[1];
        const double dz = (z + 0.5 - center[2]) / semi[2];
        const double rho = std::sqrt(dx * dx + dy * dy + dz * dz);
        if (rho >= 1.0) continue;
        const int shell = std::min(kTissueCount, static_cast<int>((1.0 - rho) / w) + 1);
        labels(x, y, z) = static_cast<std::uint8_t>(shell);
      }
    }
  }

  std::array<std::size_t, kTissueCount + 1> counts{};
  for (auto id : labels.data()) ++counts[id];
  for (int id = 1; id <= kTissueCount; ++id) {
    if (counts[id] == 0) throw Error("dims too small to fit 13 shells: tissue " + std::to_string(id) + " empty");
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<float> raw(dims.count());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    double value = phantom_tissue_mean(labels.data()[i]);
    if (config.noise > 0.0) value += config.noise * gauss(rng);
    raw[i] = static_cast<float>(value);
  }
  ScalarVolume mri(dims, config.spacing, std::move(raw));
  return {normalize_mri(mri), std::move(labels)};
}

}  // namespace forktms::volume
