#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "forktms/metrics/metrics.hpp"

using namespace forktms;
using namespace forktms::metrics;
using volume::Dims;
using volume::Spacing;

namespace {

Mask random_mask(Dims d, Spacing s, std::mt19937_64& rng, double p) {
  Mask m(d, s);
  std::bernoulli_distribution b(p);
  for (auto& v : m.data()) v = b(rng) ? 1 : 0;
  return m;
}

double brute_directed(const Mask& a, const Mask& b) {
  const auto& s = a.spacing();
  double worst = 0.0;
  for (int z = 0; z < a.dims().nz; ++z)
    for (int y = 0; y < a.dims().ny; ++y)
      for (int x = 0; x < a.dims().nx; ++x) {
        if (!a(x, y, z)) continue;
        double best = INFINITY;
        for (int k = 0; k < b.dims().nz; ++k)
          for (int j = 0; j < b.dims().ny; ++j)
            for (int i = 0; i < b.dims().nx; ++i) {
              if (!b(i, j, k)) continue;
              const double dx = (x - i) * s.sx, dy = (y - j) * s.sy, dz = (z - k) * s.sz;
              best = std::min(best, std::sqrt(dx * dx + dy * dy + dz * dz));
            }
        worst = std::max(worst, best);
      }
  return worst;
}

}  // namespace

TEST_CASE("dice closed forms") {
  Mask a({3, 2, 1}, {}), b({3, 2, 1}, {});
  a.data() = {1, 1, 1, 0, 0, 0};
  b.data() = {0, 1, 1, 1, 0, 0};
  CHECK(dice(a, b) == doctest::Approx(200.0 / 3.0));
  CHECK(dice(a, a) == 100.0);
  Mask c({3, 2, 1}, {});
  c.data() = {0, 0, 0, 0, 1, 1};
  CHECK(dice(a, c) == 0.0);
  Mask empty({3, 2, 1}, {});
  CHECK(dice(a, empty) == 0.0);
  CHECK_THROWS_WITH_AS(dice(empty, empty), doctest::Contains("empty masks"), Error);
  CHECK_THROWS_AS(dice(a, Mask({2, 2, 1}, {})), Error);
}

TEST_CASE("dice equals naive counting and is symmetric") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    auto a = random_mask({16, 16, 16}, {}, rng, 0.3), b = random_mask({16, 16, 16}, {}, rng, 0.4);
    std::size_t na = 0, nb = 0, both = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      na += a.data()[i] != 0;
      nb += b.data()[i] != 0;
      both += a.data()[i] && b.data()[i];
    }
    const double expect = 200.0 * static_cast<double>(both) / static_cast<double>(na + nb);
    CHECK(dice(a, b) == expect);
    CHECK(dice(b, a) == dice(a, b));
    CHECK(dice(a, b) < 100.0);
  }
}

TEST_CASE("hausdorff closed forms") {
  Mask a({5, 5, 1}, {}), b({5, 5, 1}, {});
  a(0, 0, 0) = 1;
  b(3, 4, 0) = 1;
  CHECK(hausdorff_directed(a, b) == doctest::Approx(5.0));
  CHECK(hausdorff_directed(a, a) == 0.0);
  Mask sup = a;
  sup(4, 4, 0) = 1;
  CHECK(hausdorff_directed(a, sup) == 0.0);
  CHECK(hausdorff_directed(sup, a) > 0.0);
  CHECK(hausdorff_symmetric(a, sup) == hausdorff_directed(sup, a));
  CHECK_THROWS_WITH_AS(hausdorff_directed(a, Mask({5, 5, 1}, {})), doctest::Contains("empty mask"), Error);
}

TEST_CASE("directed hausdorff equals brute force with anisotropic spacing") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 40; ++t) {
    const Spacing s{0.7, 1.3, 2.1};
    auto a = random_mask({9, 8, 7}, s, rng, 0.05), b = random_mask({9, 8, 7}, s, rng, 0.05);
    a(0, 0, 0) = 1;
    b(8, 7, 6) = 1;
    CHECK(std::abs(hausdorff_directed(a, b) - brute_directed(a, b)) < 1e-9);
  }
}

TEST_CASE("distance transform of an empty mask is infinite") {
  auto d = squared_distance_transform(Mask({3, 3, 3}, {}));
  CHECK(std::all_of(d.begin(), d.end(), [](double v) { return std::isinf(v); }));
}

TEST_CASE("mae") {
  volume::ScalarVolume e({4, 1, 1}, {}, std::vector<float>{1.0f, 0.5f, 0.25f, 0.75f});
  Mask all({4, 1, 1}, {}, 1);
  CHECK(mae(e, e, all) == 0.0);

  auto shifted = e;
  for (auto& v : shifted.data()) v += 0.01f;
  CHECK(mae(e, shifted, all, true) == doctest::Approx(1.0).epsilon(1e-5));

  // Normalization divides each field by its own maximum.
  auto scaled = e;
  for (auto& v : scaled.data()) v *= 3.0f;
  CHECK(mae(e, scaled, all) == doctest::Approx(0.0));
  CHECK(mae(e, scaled, all, true) > 0.0);

  volume::ScalarVolume zero({4, 1, 1}, {});
  CHECK(mae(e, zero, all) == doctest::Approx(100.0 * 2.5 / 4.0));
  CHECK_THROWS_WITH_AS(mae(zero, e, all), doctest::Contains("zero field"), Error);

  Mask none({4, 1, 1}, {}, 0);
  CHECK_THROWS_WITH_AS(mae(e, e, none), doctest::Contains("empty region"), Error);
  CHECK_THROWS_WITH_AS(mae(e, volume::ScalarVolume({3, 1, 1}, {}), all), doctest::Contains("shape mismatch"), Error);
}

TEST_CASE("mae is invariant under voxel permutations") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0.1f, 1.0f);
  volume::ScalarVolume a({50, 1, 1}, {}), b({50, 1, 1}, {});
  for (auto& v : a.data()) v = u(rng);
  for (auto& v : b.data()) v = u(rng);
  Mask region({50, 1, 1}, {}, 1);
  const double base = mae(a, b, region);
  std::vector<std::size_t> perm(50);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  auto pa = a, pb = b;
  for (std::size_t i = 0; i < 50; ++i) {
    pa.data()[i] = a.data()[perm[i]];
    pb.data()[i] = b.data()[perm[i]];
  }
  CHECK(mae(pa, pb, region) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("hotspot mae restricts to the reference hotspot") {
  volume::ScalarVolume ref({3, 1, 1}, {}, std::vector<float>{1.0f, 0.8f, 0.6f});
  volume::ScalarVolume test({3, 1, 1}, {}, std::vector<float>{1.0f, 0.8f, 0.1f});
  Mask roi({3, 1, 1}, {}, 1);
  CHECK(mae_hotspot(ref, test, roi) == 0.0);
  CHECK(mae(ref, test, roi) > 0.0);
}

TEST_CASE("label report") {
  volume::LabelVolume truth({4, 1, 1}, {}, std::vector<std::uint8_t>{1, 1, 2, 0});
  volume::LabelVolume test({4, 1, 1}, {}, std::vector<std::uint8_t>{1, 2, 2, 0});
  auto r = evaluate_labels(truth, test);
  REQUIRE(r.tissues.size() == 13);
  CHECK(r.tissues[0].dice == doctest::Approx(200.0 / 3.0));
  CHECK(r.tissues[1].dice == doctest::Approx(200.0 / 3.0));
  CHECK(std::isnan(r.tissues[5].dice));
  CHECK(r.tissues[0].hd_directed == 0.0);
  CHECK(r.tissues[0].hd_symmetric == 1.0);
  CHECK(mean_dice(r) == doctest::Approx(200.0 / 3.0));
  CHECK(mean_dice(r, 2) == doctest::Approx(200.0 / 3.0));
  r.subject = "phantom";
  r.variant = "psi";
  r.mae = 1.5;
  CHECK(r.text().find("psi") != std::string::npos);
  CHECK(r.key_values().find("mae=") != std::string::npos);
}
