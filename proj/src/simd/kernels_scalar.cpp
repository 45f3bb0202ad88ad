#include <array>

#include "forktms/simd/kernels.hpp"

namespace forktms::simd::scalar {

void sgemm(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
           int ldc) {
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<std::ptrdiff_t>(i) * ldc;
    const float* arow = a + static_cast<std::ptrdiff_t>(i) * lda;
    for (int p = 0; p < k; ++p) {
      const float aip = arow[p];
      const float* brow = b + static_cast<std::ptrdiff_t>(p) * ldb;
      for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

void sgemm_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
              int ldc) {
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<std::ptrdiff_t>(i) * lda;
    for (int j = 0; j < n; ++j) {
      const float* brow = b + static_cast<std::ptrdiff_t>(j) * ldb;
      float acc = 0.0f;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c[static_cast<std::ptrdiff_t>(i) * ldc + j] += acc;
    }
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  // Four interleaved partial sums, combined pairwise; the AVX2 variant uses
  // the same association so the two agree to rounding of the tail only.
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += x[i] * y[i];
    s1 += x[i + 1] * y[i + 1];
    s2 += x[i + 2] * y[i + 2];
    s3 += x[i + 3] * y[i + 3];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  return ((s0 + s2) + (s1 + s3)) + tail;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void hex_row_apply(const HexRow& row, const double* stiffness, const double* sigma,
                   const double* x, double* y) {
  const std::size_t offs[4] = {0, row.off_y, row.off_z, row.off_y + row.off_z};
  for (std::size_t e = 0; e < row.elements; ++e) {
    const double s = sigma[e];
    if (s == 0.0) continue;
    std::array<double, 8> xe{};
    for (int a = 0; a < 8; ++a) xe[a] = x[offs[a >> 1] + e + (a & 1)];
    for (int a = 0; a < 8; ++a) {
      double acc = 0.0;
      for (int b = 0; b < 8; ++b) acc += stiffness[a * 8 + b] * xe[b];
      y[offs[a >> 1] + e + (a & 1)] += s * acc;
    }
  }
}

}  // namespace forktms::simd::scalar
