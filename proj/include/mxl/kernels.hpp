#pragma once

#include <cstddef>
#include <cstdint>

// Dense f64 inner-loop kernels. Scalar reference implementations and AVX2
// variants share this table; the active backend is picked once at startup
// from CPUID and can be overridden with MXL_SIMD=scalar|avx2 for testing.
namespace mxl::kern {

struct Ops {
  // c = a + b / c = a * b / c = a * s, length n
  void (*add)(const double* a, const double* b, double* c, std::size_t n);
  void (*mul)(const double* a, const double* b, double* c, std::size_t n);
  void (*scale)(const double* a, double s, double* c, std::size_t n);
  // y += s * x
  void (*axpy)(double s, const double* x, double* y, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*sumsq)(const double* a, std::size_t n);
  void (*relu)(const double* a, double* c, std::size_t n);
  // dx += dy where x > 0
  void (*relu_bwd)(const double* x, const double* dy, double* dx, std::size_t n);
  // Row-major GEMM variants. acc=false overwrites C, acc=true accumulates.
  //   nn: C[m,n] (+)= A[m,k] * B[k,n]
  //   nt: C[m,n] (+)= A[m,k] * B[n,k]^T
  //   tn: C[m,n] (+)= A[k,m]^T * B[k,n]
  void (*matmul_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                    std::size_t n, bool acc);
  void (*matmul_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                    std::size_t n, bool acc);
  void (*matmul_tn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                    std::size_t n, bool acc);
};

extern const Ops scalar_ops;
#if defined(__x86_64__) || defined(_M_X64)
extern const Ops avx2_ops;
#endif

/// Active kernel table (dispatch decided on first call).
const Ops& ops();

const char* active_backend();

/// Force "scalar" or "avx2"; throws if the backend is unavailable.
void force_backend(const char* name);

/// Multiply-accumulate instrumentation (counts GEMM MACs on this thread).
std::uint64_t mac_count();
void reset_mac_count();
void bump_mac_count(std::uint64_t macs);

}  // namespace mxl::kern
