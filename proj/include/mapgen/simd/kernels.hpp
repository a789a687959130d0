#pragma once

#include <cstddef>
#include <string_view>

// Dense numeric kernels behind a per-ISA function table. Each ISA variant must agree with
// the scalar reference to rounding; tests/unit/test_kernels.cpp pins the tolerances.
namespace mapgen::simd {

template <typename T>
struct AdamWStep {
  T lr;
  T beta1;
  T beta2;
  T eps;
  T weight_decay;
  T bias_correction1;  // 1 - beta1^t
  T bias_correction2;  // 1 - beta2^t
};

template <typename T>
struct Kernels {
  std::string_view name;
  /// Row-major C[m x n] = alpha * op(A) * op(B) + beta * C, op(A) is m x k, op(B) is k x n.
  /// With trans_a, A is stored k x m; with trans_b, B is stored n x k. beta == 0 ignores C.
  void (*gemm)(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda, const T* b, int ldb,
               T beta, T* c, int ldc);
  /// y += alpha * x
  void (*axpy)(std::size_t n, T alpha, const T* x, T* y);
  /// out = alpha * x + beta * y
  void (*axpby)(std::size_t n, T alpha, const T* x, T beta, const T* y, T* out);
  /// y = x * sigmoid(x)
  void (*silu)(std::size_t n, const T* x, T* y);
  /// dx = dy * d/dx silu(x)
  void (*silu_backward)(std::size_t n, const T* x, const T* dy, T* dx);
  /// Decoupled-weight-decay Adam update of one parameter tensor.
  void (*adamw)(std::size_t n, T* param, const T* grad, T* m, T* v, const AdamWStep<T>& step);
  /// sum of squared differences
  double (*sq_diff_sum)(std::size_t n, const T* a, const T* b);
};

template <typename T>
const Kernels<T>& scalar_kernels();

/// nullptr when the build has no AVX2 variant.
template <typename T>
const Kernels<T>* avx2_kernels();

bool cpu_supports_avx2_fma();

/// Best variant for this CPU. MAPGEN_KERNELS=scalar in the environment forces the reference path.
template <typename T>
const Kernels<T>& active_kernels();

}  // namespace mapgen::simd
