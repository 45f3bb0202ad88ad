#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "forktms/simd/dispatch.hpp"
#include "forktms/simd/kernels.hpp"
#include "forktms/solver/fem.hpp"

using namespace forktms;

namespace {

std::vector<float> random_floats(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<double> random_doubles(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

bool have_avx2() { return simd::detected_level() == simd::Level::Avx2; }

}  // namespace

TEST_CASE("level selection clamps to the cpu") {
  simd::ScopedLevel pin(simd::Level::Scalar);
  CHECK(simd::active_level() == simd::Level::Scalar);
  CHECK(simd::set_level(simd::Level::Avx2) == simd::detected_level());
  CHECK(simd::to_string(simd::Level::Scalar) == "scalar");
}

TEST_CASE("sgemm avx2 matches scalar") {
  if (!have_avx2()) return;
  std::mt19937_64 rng(1);
  const int shapes[][3] = {{1, 1, 1}, {3, 7, 5}, {8, 16, 9}, {13, 33, 27}, {64, 70, 72}, {5, 4097, 3}};
  for (auto& s : shapes) {
    const int m = s[0], n = s[1], k = s[2];
    CAPTURE(m);
    CAPTURE(n);
    CAPTURE(k);
    auto a = random_floats(static_cast<std::size_t>(m) * k, rng);
    auto b = random_floats(static_cast<std::size_t>(k) * n, rng);
    auto c0 = random_floats(static_cast<std::size_t>(m) * n, rng);
    auto c1 = c0;
    simd::scalar::sgemm(m, n, k, a.data(), k, b.data(), n, c0.data(), n);
    simd::avx2::sgemm(m, n, k, a.data(), k, b.data(), n, c1.data(), n);
    for (std::size_t i = 0; i < c0.size(); ++i) CHECK(c1[i] == doctest::Approx(c0[i]).epsilon(1e-5));
  }
}

TEST_CASE("sgemm_nt avx2 matches scalar") {
  if (!have_avx2()) return;
  std::mt19937_64 rng(2);
  const int shapes[][3] = {{1, 1, 1}, {4, 9, 17}, {16, 36, 1000}, {13, 3, 4099}};
  for (auto& s : shapes) {
    const int m = s[0], n = s[1], k = s[2];
    auto a = random_floats(static_cast<std::size_t>(m) * k, rng);
    auto b = random_floats(static_cast<std::size_t>(n) * k, rng);
    std::vector<float> c0(static_cast<std::size_t>(m) * n, 0.5f), c1 = c0;
    simd::scalar::sgemm_nt(m, n, k, a.data(), k, b.data(), k, c0.data(), n);
    simd::avx2::sgemm_nt(m, n, k, a.data(), k, b.data(), k, c1.data(), n);
    for (std::size_t i = 0; i < c0.size(); ++i) CHECK(c1[i] == doctest::Approx(c0[i]).epsilon(1e-4));
  }
}

TEST_CASE("sgemm respects leading dimensions") {
  // A 2x2 block inside 3-wide rows.
  const float a[] = {1, 2, 9, 3, 4, 9};
  const float b[] = {1, 0, 9, 0, 1, 9};
  float c[] = {0, 0, 7, 0, 0, 7};
  simd::sgemm(2, 2, 2, a, 3, b, 3, c, 3);
  CHECK(c[0] == 1);
  CHECK(c[1] == 2);
  CHECK(c[2] == 7);
  CHECK(c[3] == 3);
  CHECK(c[4] == 4);
  CHECK(c[5] == 7);
}

TEST_CASE("dot and axpy avx2 match scalar") {
  if (!have_avx2()) return;
  std::mt19937_64 rng(3);
  for (std::size_t n : {0u, 1u, 3u, 8u, 15u, 1000u, 4099u}) {
    auto x = random_doubles(n, rng);
    auto y = random_doubles(n, rng);
    CHECK(simd::avx2::dot(x.data(), y.data(), n) ==
          doctest::Approx(simd::scalar::dot(x.data(), y.data(), n)).epsilon(1e-12));
    auto y0 = y, y1 = y;
    simd::scalar::axpy(0.37, x.data(), y0.data(), n);
    simd::avx2::axpy(0.37, x.data(), y1.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y0[i]).epsilon(1e-14));
  }
}

TEST_CASE("hex_row_apply avx2 matches scalar") {
  if (!have_avx2()) return;
  std::mt19937_64 rng(4);
  const auto k = solver::hex_stiffness(1e-3, 1.2e-3, 0.9e-3);
  for (std::size_t elements : {1u, 2u, 5u, 16u, 63u}) {
    const std::size_t nx = elements + 1, ny = 2, nz = 2;
    simd::HexRow row{elements, nx, nx * ny};
    auto x = random_doubles(nx * ny * nz, rng);
    auto sigma = random_doubles(elements, rng);
    for (auto& s : sigma) s = std::abs(s);
    std::vector<double> y0(x.size(), 0.0), y1 = y0;
    simd::scalar::hex_row_apply(row, k.data(), sigma.data(), x.data(), y0.data());
    simd::avx2::hex_row_apply(row, k.data(), sigma.data(), x.data(), y1.data());
    for (std::size_t i = 0; i < y0.size(); ++i) CHECK(y1[i] == doctest::Approx(y0[i]).epsilon(1e-12).scale(1e-3));
  }
}

TEST_CASE("hex_row_apply equals dense element product") {
  const auto k = solver::hex_stiffness(1e-3, 1e-3, 1e-3);
  const double x[8] = {1, 2, 3, 4, 5, 6, 7, 8};
  double y[8] = {};
  const double sigma = 0.5;
  simd::HexRow row{1, 2, 4};
  simd::hex_row_apply(row, k.data(), &sigma, x, y);
  for (int a = 0; a < 8; ++a) {
    double expect = 0.0;
    for (int b = 0; b < 8; ++b) expect += sigma * k[a * 8 + b] * x[b];
    CHECK(y[a] == doctest::Approx(expect));
  }
}
