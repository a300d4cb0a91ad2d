#include "mxl/kernels.hpp"

// Reference kernels. Deliberately plain loops: these define the semantics the
// SIMD variants are equivalence-tested against.
namespace mxl::kern {
namespace {

void add_s(const double* a, const double* b, double* c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) c[i] = a[i] + b[i];
}

void mul_s(const double* a, const double* b, double* c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) c[i] = a[i] * b[i];
}

void scale_s(const double* a, double s, double* c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) c[i] = a[i] * s;
}

void axpy_s(double s, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += s * x[i];
}

double dot_s(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_s(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double sumsq_s(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

void relu_s(const double* a, double* c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) c[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void relu_bwd_s(const double* x, const double* dy, double* dx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > 0.0) dx[i] += dy[i];
}

void matmul_nn_s(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n, bool acc) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    if (!acc)
      for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt_s(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n, bool acc) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      double v = acc ? c[i * n + j] : 0.0;
      const double* brow = b + j * k;
      for (std::size_t p = 0; p < k; ++p) v += arow[p] * brow[p];
      c[i * n + j] = v;
    }
  }
}

void matmul_tn_s(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n, bool acc) {
  if (!acc)
    for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

const Ops scalar_ops = {add_s,       mul_s,   scale_s, axpy_s,     dot_s,       sum_s,
                        sumsq_s,     relu_s,  relu_bwd_s,          matmul_nn_s, matmul_nt_s,
                        matmul_tn_s};

}  // namespace mxl::kern
