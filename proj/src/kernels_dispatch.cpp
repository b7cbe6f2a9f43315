#include <atomic>
#include <stdexcept>
#include <string>

#include "gsv/kernels.hpp"

namespace gsv::kernels {

#ifdef GSV_HAVE_AVX2
const KernelTable* avx2_table_impl();
#endif

namespace {

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable& table_for(Backend backend) {
  if (backend == Backend::avx2) {
    const KernelTable* t = avx2_table();
    if (t == nullptr || !cpu_supports_avx2())
      throw std::invalid_argument("AVX2 kernels are not available on this machine");
    return *t;
  }
  return scalar_table();
}

}  // namespace

const KernelTable* avx2_table() {
#ifdef GSV_HAVE_AVX2
  return avx2_table_impl();
#else
  return nullptr;
#endif
}

bool cpu_supports_avx2() {
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported;
#else
  return false;
#endif
}

bool backend_available(Backend backend) {
  if (backend == Backend::scalar) return true;
  return avx2_table() != nullptr && cpu_supports_avx2();
}

Backend default_backend() {
  return backend_available(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = &table_for(default_backend());
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void set_backend(Backend backend) {
  g_active.store(&table_for(backend), std::memory_order_release);
}

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
  }
  return "unknown";
}

}  // namespace gsv::kernels
