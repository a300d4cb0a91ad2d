// AVX2/FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; callers must go through the runtime dispatch table.
#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "mxl/kernels.hpp"

namespace mxl::kern {
namespace {

constexpr std::size_t kW = 4;  // doubles per 256-bit lane

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void add_v(const double* a, const double* b, double* c, std::size_t n) {
  std::size_t i = 0;
  for (; i + kW <= n; i += kW)
    _mm256_storeu_pd(c + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) c[i] = a[i] + b[i];
}

void mul_v(const double* a, const double* b, double* c, std::size_t n) {
  std::size_t i = 0;
  for (; i + kW <= n; i += kW)
    _mm256_storeu_pd(c + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) c[i] = a[i] * b[i];
}

void scale_v(const double* a, double s, double* c, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + kW <= n; i += kW)
    _mm256_storeu_pd(c + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
  for (; i < n; ++i) c[i] = a[i] * s;
}

void axpy_v(double s, const double* x, double* y, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + kW <= n; i += kW)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(vs, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += s * x[i];
}

void relu_v(const double* a, double* c, std::size_t n) {
  const __m256d z = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kW <= n; i += kW)
    _mm256_storeu_pd(c + i, _mm256_max_pd(_mm256_loadu_pd(a + i), z));
  for (; i < n; ++i) c[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void relu_bwd_v(const double* x, const double* dy, double* dx, std::size_t n) {
  const __m256d z = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kW <= n; i += kW) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), z, _CMP_GT_OQ);
    const __m256d upd = _mm256_and_pd(mask, _mm256_loadu_pd(dy + i));
    _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), upd));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0) dx[i] += dy[i];
}

double dot_v(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kW <= n; i += kW)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

double sum_v(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kW <= n; i += kW) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i];
  return r;
}

double sumsq_v(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kW <= n; i += kW) {
    const __m256d v = _mm256_loadu_pd(a + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i] * a[i];
  return r;
}

void matmul_nn_v(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n, bool acc) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    if (!acc)
      for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const __m256d va = _mm256_set1_pd(av);
      const double* brow = b + p * n;
      std::size_t j = 0;
      for (; j + kW <= n; j += kW)
        _mm256_storeu_pd(crow + j,
                         _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), _mm256_loadu_pd(crow + j)));
      for (; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt_v(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n, bool acc) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      double v = dot_v(arow, b + j * k, k);
      c[i * n + j] = acc ? c[i * n + j] + v : v;
    }
  }
}

void matmul_tn_v(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n, bool acc) {
  if (!acc)
    for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const __m256d va = _mm256_set1_pd(arow[i]);
      double* crow = c + i * n;
      std::size_t j = 0;
      for (; j + kW <= n; j += kW)
        _mm256_storeu_pd(crow + j,
                         _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), _mm256_loadu_pd(crow + j)));
      for (; j < n; ++j) crow[j] += arow[i] * brow[j];
    }
  }
}

}  // namespace

const Ops avx2_ops = {add_v,       mul_v,   scale_v, axpy_v,     dot_v,       sum_v,
                      sumsq_v,     relu_v,  relu_bwd_v,          matmul_nn_v, matmul_nt_v,
                      matmul_tn_v};

}  // namespace mxl::kern

#endif  // x86_64
