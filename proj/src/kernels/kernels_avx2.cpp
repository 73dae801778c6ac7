// AVX2/FMA kernels. This translation unit is the only one compiled with
// -mavx2 -mfma, so no AVX instruction can leak into code that runs before
// the dispatcher has checked CPU support.
//
// Accumulators are split across two registers in dot/dot_rev to break the
// FMA dependency chain; results therefore differ from the scalar loops by
// reassociation rounding only.

#include "kernel_table.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace coprosim::kernels {
namespace {

double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double dot_rev_avx2(const double* a, const double* b, std::size_t n) {
  // Lane-reversing the b loads turns the reversed dot into a forward one:
  // lanes of vb become b[n-1-i], b[n-2-i], b[n-3-i], b[n-4-i].
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d va = _mm256_loadu_pd(a + i);
    __m256d vb = _mm256_loadu_pd(b + (n - i - 4));
    vb = _mm256_permute4x64_pd(vb, 0x1B);  // [3,2,1,0]
    acc = _mm256_fmadd_pd(va, vb, acc);
  }
  double out = hsum(acc);
  for (; i < n; ++i) out += a[i] * b[n - 1 - i];
  return out;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                 _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_avx2(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) y[i] = dot_avx2(a + i * cols, x, cols);
}

void matvec_t_avx2(const double* a, std::size_t rows, std::size_t cols,
                   const double* x, double* y) {
  for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) axpy_avx2(x[i], a + i * cols, y, cols);
}

void outer_acc_avx2(double alpha, const double* u, std::size_t m,
                    const double* v, std::size_t n, double* a) {
  for (std::size_t i = 0; i < m; ++i) axpy_avx2(alpha * u[i], v, a + i * n, n);
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table = {dot_avx2,    dot_rev_avx2, axpy_avx2,
                                    matvec_avx2, matvec_t_avx2, outer_acc_avx2};
  return &table;
}

}  // namespace coprosim::kernels

#else  // built without AVX2 (non-x86 target or compiler flag missing)

namespace coprosim::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace coprosim::kernels

#endif
