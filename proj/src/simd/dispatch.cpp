#include <cstdlib>
#include <string_view>

#include "mapgen/simd/kernels.hpp"

namespace mapgen::simd {

bool cpu_supports_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

bool forced_scalar() {
  const char* env = std::getenv("MAPGEN_KERNELS");
  return env != nullptr && std::string_view(env) == "scalar";
}

template <typename T>
const Kernels<T>& select() {
  if (!forced_scalar() && cpu_supports_avx2_fma()) {
    if (const Kernels<T>* k = avx2_kernels<T>()) return *k;
  }
  return scalar_kernels<T>();
}

}  // namespace

template <typename T>
const Kernels<T>& active_kernels() {
  static const Kernels<T>& chosen = select<T>();
  return chosen;
}

template const Kernels<float>& active_kernels<float>();
template const Kernels<double>& active_kernels<double>();

#if !defined(MAPGEN_HAVE_AVX2)
template <typename T>
const Kernels<T>* avx2_kernels() {
  return nullptr;
}
template const Kernels<float>* avx2_kernels<float>();
template const Kernels<double>* avx2_kernels<double>();
#endif

}  // namespace mapgen::simd
