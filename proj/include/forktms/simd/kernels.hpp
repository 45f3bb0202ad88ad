#pragma once

// Data-parallel inner loops used by the convolution engine and the FEM
// operator. Each kernel has a portable scalar reference in `scalar::` and,
// on x86-64, an AVX2/FMA variant in `avx2::`. The unqualified entry points
// dispatch at runtime on the active level (see dispatch.hpp).

#include <cstddef>

namespace forktms::simd {

// Geometry of one row of hexahedral elements along x. Node arrays are laid
// out x-fastest; the four node rows touching the element row are addressed
// by the offsets below relative to the row's first node.
struct HexRow {
  std::size_t elements = 0;      // elements in the row
  std::size_t off_y = 0;         // node offset to the (j+1) row
  std::size_t off_z = 0;         // node offset to the (k+1) plane
};

namespace scalar {
void sgemm(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
           int ldc);
void sgemm_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
              int ldc);
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void hex_row_apply(const HexRow& row, const double* stiffness, const double* sigma,
                   const double* x, double* y);
}  // namespace scalar

namespace avx2 {
void sgemm(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
           int ldc);
void sgemm_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
              int ldc);
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void hex_row_apply(const HexRow& row, const double* stiffness, const double* sigma,
                   const double* x, double* y);
}  // namespace avx2

/// C[m x n] += A[m x k] * B[k x n], all row-major with the given leading
/// dimensions.
void sgemm(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
           int ldc);

/// C[m x n] += A[m x k] * B[n x k]^T. Every output is a dot product of two
/// contiguous rows, which suits long k and few outputs (weight gradients).
void sgemm_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
              int ldc);

double dot(const double* x, const double* y, std::size_t n);

/// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

/// y += sigma_e * K * x_e for every element e of the row, where K is the
/// 8x8 reference stiffness (row-major, local node a = dx + 2*dy + 4*dz) and
/// x_e gathers the element's corner values from `x`.
void hex_row_apply(const HexRow& row, const double* stiffness, const double* sigma,
                   const double* x, double* y);

}  // namespace forktms::simd
