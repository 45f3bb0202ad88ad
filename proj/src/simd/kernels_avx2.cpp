#include "forktms/simd/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif

namespace forktms::simd::avx2 {

#if defined(__AVX2__) && defined(__FMA__)

namespace {

// 4 x 16 register tile: eight ymm accumulators, one broadcast per row.
inline void tile_4x16(int k, const float* a, int lda, const float* b, int ldb, float* c,
                      int ldc) {
  __m256 c00 = _mm256_loadu_ps(c), c01 = _mm256_loadu_ps(c + 8);
  __m256 c10 = _mm256_loadu_ps(c + ldc), c11 = _mm256_loadu_ps(c + ldc + 8);
  __m256 c20 = _mm256_loadu_ps(c + 2 * ldc), c21 = _mm256_loadu_ps(c + 2 * ldc + 8);
  __m256 c30 = _mm256_loadu_ps(c + 3 * ldc), c31 = _mm256_loadu_ps(c + 3 * ldc + 8);
  for (int p = 0; p < k; ++p) {
    const float* brow = b + static_cast<std::ptrdiff_t>(p) * ldb;
    const __m256 b0 = _mm256_loadu_ps(brow);
    const __m256 b1 = _mm256_loadu_ps(brow + 8);
    __m256 av = _mm256_broadcast_ss(a + p);
    c00 = _mm256_fmadd_ps(av, b0, c00);
    c01 = _mm256_fmadd_ps(av, b1, c01);
    av = _mm256_broadcast_ss(a + lda + p);
    c10 = _mm256_fmadd_ps(av, b0, c10);
    c11 = _mm256_fmadd_ps(av, b1, c11);
    av = _mm256_broadcast_ss(a + 2 * lda + p);
    c20 = _mm256_fmadd_ps(av, b0, c20);
    c21 = _mm256_fmadd_ps(av, b1, c21);
    av = _mm256_broadcast_ss(a + 3 * lda + p);
    c30 = _mm256_fmadd_ps(av, b0, c30);
    c31 = _mm256_fmadd_ps(av, b1, c31);
  }
  _mm256_storeu_ps(c, c00);
  _mm256_storeu_ps(c + 8, c01);
  _mm256_storeu_ps(c + ldc, c10);
  _mm256_storeu_ps(c + ldc + 8, c11);
  _mm256_storeu_ps(c + 2 * ldc, c20);
  _mm256_storeu_ps(c + 2 * ldc + 8, c21);
  _mm256_storeu_ps(c + 3 * ldc, c30);
  _mm256_storeu_ps(c + 3 * ldc + 8, c31);
}

inline void tile_1x16(int k, const float* a, const float* b, int ldb, float* c) {
  __m256 c0 = _mm256_loadu_ps(c), c1 = _mm256_loadu_ps(c + 8);
  for (int p = 0; p < k; ++p) {
    const float* brow = b + static_cast<std::ptrdiff_t>(p) * ldb;
    const __m256 av = _mm256_broadcast_ss(a + p);
    c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow), c0);
    c1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + 8), c1);
  }
  _mm256_storeu_ps(c, c0);
  _mm256_storeu_ps(c + 8, c1);
}

}  // namespace

void sgemm(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
           int ldc) {
  const int n16 = n - n % 16;
  for (int j = 0; j < n16; j += 16) {
    int i = 0;
    for (; i + 4 <= m; i += 4)
      tile_4x16(k, a + static_cast<std::ptrdiff_t>(i) * lda, lda, b + j, ldb,
                c + static_cast<std::ptrdiff_t>(i) * ldc + j, ldc);
    for (; i < m; ++i)
      tile_1x16(k, a + static_cast<std::ptrdiff_t>(i) * lda, b + j, ldb,
                c + static_cast<std::ptrdiff_t>(i) * ldc + j);
  }
  if (n16 < n) {
    scalar::sgemm(m, n - n16, k, a, lda, b + n16, ldb, c + n16, ldc);
  }
}

namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 0x55));
  return _mm_cvtss_f32(lo);
}

}  // namespace

void sgemm_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
              int ldc) {
  const int k8 = k - k % 8;
  int i = 0;
  // 2 x 2 block of dot products per pass over k.
  for (; i + 2 <= m; i += 2) {
    const float* a0 = a + static_cast<std::ptrdiff_t>(i) * lda;
    const float* a1 = a0 + lda;
    int j = 0;
    for (; j + 2 <= n; j += 2) {
      const float* b0 = b + static_cast<std::ptrdiff_t>(j) * ldb;
      const float* b1 = b0 + ldb;
      __m256 s00 = _mm256_setzero_ps(), s01 = _mm256_setzero_ps();
      __m256 s10 = _mm256_setzero_ps(), s11 = _mm256_setzero_ps();
      for (int p = 0; p < k8; p += 8) {
        const __m256 va0 = _mm256_loadu_ps(a0 + p), va1 = _mm256_loadu_ps(a1 + p);
        const __m256 vb0 = _mm256_loadu_ps(b0 + p), vb1 = _mm256_loadu_ps(b1 + p);
        s00 = _mm256_fmadd_ps(va0, vb0, s00);
        s01 = _mm256_fmadd_ps(va0, vb1, s01);
        s10 = _mm256_fmadd_ps(va1, vb0, s10);
        s11 = _mm256_fmadd_ps(va1, vb1, s11);
      }
      float r00 = hsum(s00), r01 = hsum(s01), r10 = hsum(s10), r11 = hsum(s11);
      for (int p = k8; p < k; ++p) {
        r00 += a0[p] * b0[p];
        r01 += a0[p] * b1[p];
        r10 += a1[p] * b0[p];
        r11 += a1[p] * b1[p];
      }
      float* c0 = c + static_cast<std::ptrdiff_t>(i) * ldc + j;
      c0[0] += r00;
      c0[1] += r01;
      c0[ldc] += r10;
      c0[ldc + 1] += r11;
    }
    for (; j < n; ++j) {
      scalar::sgemm_nt(2, 1, k, a0, lda, b + static_cast<std::ptrdiff_t>(j) * ldb, ldb,
                       c + static_cast<std::ptrdiff_t>(i) * ldc + j, ldc);
    }
  }
  for (; i < m; ++i) {
    const float* a0 = a + static_cast<std::ptrdiff_t>(i) * lda;
    for (int j = 0; j < n; ++j) {
      const float* b0 = b + static_cast<std::ptrdiff_t>(j) * ldb;
      __m256 s = _mm256_setzero_ps();
      for (int p = 0; p < k8; p += 8) s = _mm256_fmadd_ps(_mm256_loadu_ps(a0 + p), _mm256_loadu_ps(b0 + p), s);
      float r = hsum(s);
      for (int p = k8; p < k; ++p) r += a0[p] * b0[p];
      c[static_cast<std::ptrdiff_t>(i) * ldc + j] += r;
    }
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  return ((lanes[0] + lanes[2]) + (lanes[1] + lanes[3])) + tail;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void hex_row_apply(const HexRow& row, const double* stiffness, const double* sigma,
                   const double* x, double* y) {
  const std::size_t offs[4] = {0, row.off_y, row.off_z, row.off_y + row.off_z};
  const std::size_t vec_end = row.elements - row.elements % 4;
  for (std::size_t e = 0; e < vec_end; e += 4) {
    const __m256d sv = _mm256_loadu_pd(sigma + e);
    if (_mm256_movemask_pd(_mm256_cmp_pd(sv, _mm256_setzero_pd(), _CMP_NEQ_OQ)) == 0) continue;
    __m256d xv[8];
    for (int a = 0; a < 8; ++a) xv[a] = _mm256_loadu_pd(x + offs[a >> 1] + e + (a & 1));
    __m256d res[8];
    for (int a = 0; a < 8; ++a) {
      const double* krow = stiffness + a * 8;
      __m256d acc = _mm256_mul_pd(_mm256_set1_pd(krow[0]), xv[0]);
      for (int b = 1; b < 8; ++b) acc = _mm256_fmadd_pd(_mm256_set1_pd(krow[b]), xv[b], acc);
      res[a] = _mm256_mul_pd(sv, acc);
    }
    // Left corners of the four elements first, then the right corners; the
    // second pass re-reads the overlapping node.
    for (int r = 0; r < 4; ++r) {
      double* yl = y + offs[r] + e;
      _mm256_storeu_pd(yl, _mm256_add_pd(_mm256_loadu_pd(yl), res[2 * r]));
      double* yr = yl + 1;
      _mm256_storeu_pd(yr, _mm256_add_pd(_mm256_loadu_pd(yr), res[2 * r + 1]));
    }
  }
  if (vec_end < row.elements) {
    HexRow tail = row;
    tail.elements = row.elements - vec_end;
    scalar::hex_row_apply(tail, stiffness, sigma + vec_end, x + vec_end, y + vec_end);
  }
}

#else

void sgemm(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
           int ldc) {
  scalar::sgemm(m, n, k, a, lda, b, ldb, c, ldc);
}
void sgemm_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
              int ldc) {
  scalar::sgemm_nt(m, n, k, a, lda, b, ldb, c, ldc);
}
double dot(const double* x, const double* y, std::size_t n) { return scalar::dot(x, y, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { scalar::axpy(alpha, x, y, n); }
void hex_row_apply(const HexRow& row, const double* stiffness, const double* sigma,
                   const double* x, double* y) {
  scalar::hex_row_apply(row, stiffness, sigma, x, y);
}

#endif

}  // namespace forktms::simd::avx2
