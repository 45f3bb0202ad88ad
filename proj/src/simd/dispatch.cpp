#include "forktms/simd/dispatch.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "forktms/simd/kernels.hpp"

namespace forktms::simd {
namespace {

Level detect() {
#if defined(FORKTMS_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Level::Avx2;
#endif
  return Level::Scalar;
}

Level initial_level() {
  const Level best = detect();
  if (const char* env = std::getenv("FORKTMS_SIMD")) {
    if (std::string(env) == "scalar") return Level::Scalar;
  }
  return best;
}

std::atomic<Level>& current() {
  static std::atomic<Level> level{initial_level()};
  return level;
}

}  // namespace

std::string_view to_string(Level level) {
  switch (level) {
    case Level::Scalar: return "scalar";
    case Level::Avx2: return "avx2";
  }
  return "unknown";
}

Level detected_level() {
  static const Level level = detect();
  return level;
}

Level active_level() { return current().load(std::memory_order_relaxed); }

Level set_level(Level level) {
  if (level == Level::Avx2 && detected_level() != Level::Avx2) level = Level::Scalar;
  current().store(level, std::memory_order_relaxed);
  return level;
}

void sgemm(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
           int ldc) {
  if (active_level() == Level::Avx2) return avx2::sgemm(m, n, k, a, lda, b, ldb, c, ldc);
  scalar::sgemm(m, n, k, a, lda, b, ldb, c, ldc);
}

void sgemm_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
              int ldc) {
  if (active_level() == Level::Avx2) return avx2::sgemm_nt(m, n, k, a, lda, b, ldb, c, ldc);
  scalar::sgemm_nt(m, n, k, a, lda, b, ldb, c, ldc);
}

double dot(const double* x, const double* y, std::size_t n) {
  if (active_level() == Level::Avx2) return avx2::dot(x, y, n);
  return scalar::dot(x, y, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  if (active_level() == Level::Avx2) return avx2::axpy(alpha, x, y, n);
  scalar::axpy(alpha, x, y, n);
}

void hex_row_apply(const HexRow& row, const double* stiffness, const double* sigma,
                   const double* x, double* y) {
  if (active_level() == Level::Avx2) return avx2::hex_row_apply(row, stiffness, sigma, x, y);
  scalar::hex_row_apply(row, stiffness, sigma, x, y);
}

}  // namespace forktms::simd
