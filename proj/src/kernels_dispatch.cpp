#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "mxl/kernels.hpp"

namespace mxl::kern {
namespace {

std::atomic<const Ops*> g_active{nullptr};
const char* g_name = "scalar";

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

void select_default() {
  const char* env = std::getenv("MXL_SIMD");
#if defined(__x86_64__) || defined(_M_X64)
  const bool want_scalar = env && std::strcmp(env, "scalar") == 0;
  if (!want_scalar && avx2_available()) {
    g_name = "avx2";
    g_active.store(&avx2_ops);
    return;
  }
#endif
  (void)env;
  g_name = "scalar";
  g_active.store(&scalar_ops);
}

thread_local std::uint64_t t_macs = 0;

}  // namespace

const Ops& ops() {
  const Ops* p = g_active.load(std::memory_order_acquire);
  if (!p) {
    select_default();
    p = g_active.load(std::memory_order_acquire);
  }
  return *p;
}

const char* active_backend() {
  if (!g_active.load()) select_default();
  return g_name;
}

void force_backend(const char* name) {
  if (std::strcmp(name, "scalar") == 0) {
    g_name = "scalar";
    g_active.store(&scalar_ops);
    return;
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (std::strcmp(name, "avx2") == 0) {
    if (!avx2_available()) throw std::runtime_error("avx2 backend not available on this CPU");
    g_name = "avx2";
    g_active.store(&avx2_ops);
    return;
  }
#endif
  throw std::runtime_error(std::string("unknown kernel backend: ") + name);
}

std::uint64_t mac_count() { return t_macs; }
void reset_mac_count() { t_macs = 0; }
void bump_mac_count(std::uint64_t macs) { t_macs += macs; }

}  // namespace mxl::kern
