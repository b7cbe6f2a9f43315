// Compiled with -mavx2 -mfma. Only reached through the dispatch table after a
// runtime CPU check.

#include <immintrin.h>

#include <algorithm>

#include "gsv/kernels.hpp"

namespace gsv::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void gemv_avx2(const double* a, std::size_t rows, std::size_t cols,
               const double* x, double* out) {
  const std::size_t body = cols & ~std::size_t{3};
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = a + i * cols;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < body; j += 4)
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(x + j), acc);
    double s = hsum(acc);
    for (std::size_t j = body; j < cols; ++j) s += row[j] * x[j];
    out[i] = s;
  }
}

void gemv_t_avx2(const double* a, std::size_t rows, std::size_t cols,
                 const double* coef, double* out) {
  std::size_t j0 = 0;
  for (; j0 + 8 <= cols; j0 += 8) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (std::size_t i = 0; i < rows; ++i) {
      if (coef[i] == 0.0) continue;
      const __m256d c = _mm256_broadcast_sd(coef + i);
      const double* p = a + i * cols + j0;
      acc0 = _mm256_fmadd_pd(c, _mm256_loadu_pd(p), acc0);
      acc1 = _mm256_fmadd_pd(c, _mm256_loadu_pd(p + 4), acc1);
    }
    _mm256_storeu_pd(out + j0, acc0);
    _mm256_storeu_pd(out + j0 + 4, acc1);
  }
  for (; j0 + 4 <= cols; j0 += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < rows; ++i) {
      if (coef[i] == 0.0) continue;
      acc = _mm256_fmadd_pd(_mm256_broadcast_sd(coef + i),
                            _mm256_loadu_pd(a + i * cols + j0), acc);
    }
    _mm256_storeu_pd(out + j0, acc);
  }
  for (; j0 < cols; ++j0) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) s += coef[i] * a[i * cols + j0];
    out[j0] = s;
  }
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_sq_dev_avx2(const double* w, const double* v, double center,
                            std::size_t n) {
  const __m256d c = _mm256_set1_pd(center);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dv = _mm256_sub_pd(_mm256_loadu_pd(v + i), c);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), dv), dv, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double dv = v[i] - center;
    s += w[i] * dv * dv;
  }
  return s;
}

double weighted_excess_avx2(const double* w, const double* v, double t,
                            std::size_t n) {
  const __m256d tv = _mm256_set1_pd(t);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ex = _mm256_max_pd(_mm256_sub_pd(_mm256_loadu_pd(v + i), tv), zero);
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), ex, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * std::max(v[i] - t, 0.0);
  return s;
}

void cvar_scores_avx2(const double* v, double t, double inv_alpha,
                      std::size_t n, double* out) {
  const __m256d tv = _mm256_set1_pd(t);
  const __m256d ia = _mm256_set1_pd(inv_alpha);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ex = _mm256_max_pd(_mm256_sub_pd(_mm256_loadu_pd(v + i), tv), zero);
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(ia, ex, tv));
  }
  for (; i < n; ++i) out[i] = t + inv_alpha * std::max(v[i] - t, 0.0);
}

constexpr KernelTable kAvx2{
    Backend::avx2,        gemv_avx2,           gemv_t_avx2,
    dot_avx2,             weighted_sq_dev_avx2, weighted_excess_avx2,
    cvar_scores_avx2,
};

}  // namespace

const KernelTable* avx2_table_impl() { return &kAvx2; }

}  // namespace gsv::kernels
