// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mapgen/simd/kernels.hpp"

namespace mapgen::simd {

namespace {

template <typename T>
struct Vec;

template <>
struct Vec<float> {
  using V = __m256;
  static constexpr int kLanes = 8;
  static V zero() { return _mm256_setzero_ps(); }
  static V set1(float x) { return _mm256_set1_ps(x); }
  static V load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, V v) { _mm256_storeu_ps(p, v); }
  static V fmadd(V a, V b, V c) { return _mm256_fmadd_ps(a, b, c); }
  static V add(V a, V b) { return _mm256_add_ps(a, b); }
  static V sub(V a, V b) { return _mm256_sub_ps(a, b); }
  static V mul(V a, V b) { return _mm256_mul_ps(a, b); }
  static V div(V a, V b) { return _mm256_div_ps(a, b); }
  static V sqrt(V a) { return _mm256_sqrt_ps(a); }
};

template <>
struct Vec<double> {
  using V = __m256d;
  static constexpr int kLanes = 4;
  static V zero() { return _mm256_setzero_pd(); }
  static V set1(double x) { return _mm256_set1_pd(x); }
  static V load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, V v) { _mm256_storeu_pd(p, v); }
  static V fmadd(V a, V b, V c) { return _mm256_fmadd_pd(a, b, c); }
  static V add(V a, V b) { return _mm256_add_pd(a, b); }
  static V sub(V a, V b) { return _mm256_sub_pd(a, b); }
  static V mul(V a, V b) { return _mm256_mul_pd(a, b); }
  static V div(V a, V b) { return _mm256_div_pd(a, b); }
  static V sqrt(V a) { return _mm256_sqrt_pd(a); }
};

// ---------------------------------------------------------------------------
// GEMM: packed panels, 6 x (2 * lanes) register tile.

constexpr int kMr = 6;
constexpr int kKc = 256;
constexpr int kMc = 120;
constexpr int kNc = 1024;

template <typename T>
constexpr int kNr = 2 * Vec<T>::kLanes;

template <typename T>
void pack_a(bool ta, const T* a, int lda, int i0, int p0, int mc, int kc, T* out) {
  for (int ir = 0; ir < mc; ir += kMr) {
    const int rows = std::min(kMr, mc - ir);
    for (int p = 0; p < kc; ++p) {
      for (int r = 0; r < kMr; ++r) {
        T v = T(0);
        if (r < rows) {
          const int i = i0 + ir + r;
          const int kk = p0 + p;
          v = ta ? a[static_cast<std::ptrdiff_t>(kk) * lda + i] : a[static_cast<std::ptrdiff_t>(i) * lda + kk];
        }
        *out++ = v;
      }
    }
  }
}

template <typename T>
void pack_b(bool tb, const T* b, int ldb, int p0, int j0, int kc, int nc, T* out) {
  constexpr int nr = kNr<T>;
  for (int jr = 0; jr < nc; jr += nr) {
    const int cols = std::min(nr, nc - jr);
    for (int p = 0; p < kc; ++p) {
      const int kk = p0 + p;
      if (!tb && cols == nr) {
        const T* src = b + static_cast<std::ptrdiff_t>(kk) * ldb + j0 + jr;
        std::copy(src, src + nr, out);
        out += nr;
        continue;
      }
      for (int c = 0; c < nr; ++c) {
        T v = T(0);
        if (c < cols) {
          const int j = j0 + jr + c;
          v = tb ? b[static_cast<std::ptrdiff_t>(j) * ldb + kk] : b[static_cast<std::ptrdiff_t>(kk) * ldb + j];
        }
        *out++ = v;
      }
    }
  }
}

template <typename T>
void micro_kernel(int kc, const T* pa, const T* pb, T alpha, T* c, int ldc, int rows, int cols) {
  using W = Vec<T>;
  using V = typename W::V;
  constexpr int L = W::kLanes;
  V c00 = W::zero(), c01 = W::zero(), c10 = W::zero(), c11 = W::zero(), c20 = W::zero(), c21 = W::zero();
  V c30 = W::zero(), c31 = W::zero(), c40 = W::zero(), c41 = W::zero(), c50 = W::zero(), c51 = W::zero();
  for (int p = 0; p < kc; ++p) {
    const V b0 = W::load(pb);
    const V b1 = W::load(pb + L);
    V a = W::set1(pa[0]);
    c00 = W::fmadd(a, b0, c00);
    c01 = W::fmadd(a, b1, c01);
    a = W::set1(pa[1]);
    c10 = W::fmadd(a, b0, c10);
    c11 = W::fmadd(a, b1, c11);
    a = W::set1(pa[2]);
    c20 = W::fmadd(a, b0, c20);
    c21 = W::fmadd(a, b1, c21);
    a = W::set1(pa[3]);
    c30 = W::fmadd(a, b0, c30);
    c31 = W::fmadd(a, b1, c31);
    a = W::set1(pa[4]);
    c40 = W::fmadd(a, b0, c40);
    c41 = W::fmadd(a, b1, c41);
    a = W::set1(pa[5]);
    c50 = W::fmadd(a, b0, c50);
    c51 = W::fmadd(a, b1, c51);
    pa += kMr;
    pb += 2 * L;
  }
  const V va = W::set1(alpha);
  const V acc[kMr][2] = {{c00, c01}, {c10, c11}, {c20, c21}, {c30, c31}, {c40, c41}, {c50, c51}};
  if (rows == kMr && cols == 2 * L) {
    for (int r = 0; r < kMr; ++r) {
      T* crow = c + static_cast<std::ptrdiff_t>(r) * ldc;
      W::store(crow, W::fmadd(va, acc[r][0], W::load(crow)));
      W::store(crow + L, W::fmadd(va, acc[r][1], W::load(crow + L)));
    }
    return;
  }
  alignas(32) T tmp[kMr][2 * L];
  for (int r = 0; r < kMr; ++r) {
    W::store(&tmp[r][0], acc[r][0]);
    W::store(&tmp[r][L], acc[r][1]);
  }
  for (int r = 0; r < rows; ++r) {
    T* crow = c + static_cast<std::ptrdiff_t>(r) * ldc;
    for (int j = 0; j < cols; ++j) crow[j] += alpha * tmp[r][j];
  }
}

template <typename T>
void gemm_avx2(bool ta, bool tb, int m, int n, int k, T alpha, const T* a, int lda, const T* b, int ldb, T beta, T* c,
               int ldc) {
  constexpr int nr = kNr<T>;
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::ptrdiff_t>(i) * ldc;
    if (beta == T(0))
      std::fill(crow, crow + n, T(0));
    else if (beta != T(1))
      for (int j = 0; j < n; ++j) crow[j] *= beta;
  }
  if (k == 0 || alpha == T(0)) return;

  thread_local std::vector<T> buf_a;
  thread_local std::vector<T> buf_b;
  buf_a.resize(static_cast<std::size_t>(kMc + kMr) * kKc);
  buf_b.resize(static_cast<std::size_t>(kNc + nr) * kKc);

  for (int jc = 0; jc < n; jc += kNc) {
    const int nc = std::min(kNc, n - jc);
    for (int pc = 0; pc < k; pc += kKc) {
      const int kc = std::min(kKc, k - pc);
      pack_b(tb, b, ldb, pc, jc, kc, nc, buf_b.data());
      for (int ic = 0; ic < m; ic += kMc) {
        const int mc = std::min(kMc, m - ic);
        pack_a(ta, a, lda, ic, pc, mc, kc, buf_a.data());
        for (int jr = 0; jr < nc; jr += nr) {
          const T* pb = buf_b.data() + static_cast<std::ptrdiff_t>(jr / nr) * nr * kc;
          for (int ir = 0; ir < mc; ir += kMr) {
            const T* pa = buf_a.data() + static_cast<std::ptrdiff_t>(ir / kMr) * kMr * kc;
            T* cblk = c + static_cast<std::ptrdiff_t>(ic + ir) * ldc + jc + jr;
            micro_kernel<T>(kc, pa, pb, alpha, cblk, ldc, std::min(kMr, mc - ir), std::min(nr, nc - jr));
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Elementwise.

template <typename T>
void axpy_avx2(std::size_t n, T alpha, const T* x, T* y) {
  using W = Vec<T>;
  const auto va = W::set1(alpha);
  std::size_t i = 0;
  for (; i + W::kLanes <= n; i += W::kLanes) W::store(y + i, W::fmadd(va, W::load(x + i), W::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void axpby_avx2(std::size_t n, T alpha, const T* x, T beta, const T* y, T* out) {
  using W = Vec<T>;
  const auto va = W::set1(alpha);
  const auto vb = W::set1(beta);
  std::size_t i = 0;
  for (; i + W::kLanes <= n; i += W::kLanes) W::store(out + i, W::fmadd(va, W::load(x + i), W::mul(vb, W::load(y + i))));
  for (; i < n; ++i) out[i] = alpha * x[i] + beta * y[i];
}

// Cephes-style expf: range reduction by ln2, degree-5 polynomial, exponent reconstruction.
inline __m256 exp256(__m256 x) {
  x = _mm256_min_ps(x, _mm256_set1_ps(88.3762626647949f));
  x = _mm256_max_ps(x, _mm256_set1_ps(-88.3762626647949f));
  __m256 fx = _mm256_fmadd_ps(x, _mm256_set1_ps(1.44269504088896341f), _mm256_set1_ps(0.5f));
  fx = _mm256_floor_ps(fx);
  x = _mm256_fnmadd_ps(fx, _mm256_set1_ps(0.693359375f), x);
  x = _mm256_fnmadd_ps(fx, _mm256_set1_ps(-2.12194440e-4f), x);
  __m256 y = _mm256_set1_ps(1.9875691500E-4f);
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.3981999507E-3f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(8.3334519073E-3f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(4.1665795894E-2f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.6666665459E-1f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(5.0000001201E-1f));
  y = _mm256_fmadd_ps(y, _mm256_mul_ps(x, x), _mm256_add_ps(x, _mm256_set1_ps(1.0f)));
  __m256i e = _mm256_cvttps_epi32(fx);
  e = _mm256_slli_epi32(_mm256_add_epi32(e, _mm256_set1_epi32(127)), 23);
  return _mm256_mul_ps(y, _mm256_castsi256_ps(e));
}

inline __m256 sigmoid256(__m256 x) {
  const __m256 one = _mm256_set1_ps(1.0f);
  return _mm256_div_ps(one, _mm256_add_ps(one, exp256(_mm256_sub_ps(_mm256_setzero_ps(), x))));
}

void silu_f32(std::size_t n, const float* x, float* y) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    _mm256_storeu_ps(y + i, _mm256_mul_ps(v, sigmoid256(v)));
  }
  for (; i < n; ++i) y[i] = x[i] / (1.0f + std::exp(-x[i]));
}

void silu_backward_f32(std::size_t n, const float* x, const float* dy, float* dx) {
  const __m256 one = _mm256_set1_ps(1.0f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    const __m256 s = sigmoid256(v);
    const __m256 d = _mm256_mul_ps(s, _mm256_fmadd_ps(v, _mm256_sub_ps(one, s), one));
    _mm256_storeu_ps(dx + i, _mm256_mul_ps(_mm256_loadu_ps(dy + i), d));
  }
  for (; i < n; ++i) {
    const float s = 1.0f / (1.0f + std::exp(-x[i]));
    dx[i] = dy[i] * s * (1.0f + x[i] * (1.0f - s));
  }
}

// Double precision is only used for verification runs; exp stays in libm.
void silu_f64(std::size_t n, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] / (1.0 + std::exp(-x[i]));
}

void silu_backward_f64(std::size_t n, const double* x, const double* dy, double* dx) {
  for (std::size_t i = 0; i < n; ++i) {
    const double s = 1.0 / (1.0 + std::exp(-x[i]));
    dx[i] = dy[i] * s * (1.0 + x[i] * (1.0 - s));
  }
}

template <typename T>
void adamw_avx2(std::size_t n, T* p, const T* g, T* m, T* v, const AdamWStep<T>& s) {
  using W = Vec<T>;
  const auto b1 = W::set1(s.beta1), b1c = W::set1(T(1) - s.beta1);
  const auto b2 = W::set1(s.beta2), b2c = W::set1(T(1) - s.beta2);
  const auto ibc1 = W::set1(T(1) / s.bias_correction1), ibc2 = W::set1(T(1) / s.bias_correction2);
  const auto eps = W::set1(s.eps), lr = W::set1(s.lr), wd = W::set1(s.weight_decay);
  std::size_t i = 0;
  for (; i + W::kLanes <= n; i += W::kLanes) {
    const auto gv = W::load(g + i);
    const auto mv = W::fmadd(b1, W::load(m + i), W::mul(b1c, gv));
    const auto vv = W::fmadd(b2, W::load(v + i), W::mul(b2c, W::mul(gv, gv)));
    W::store(m + i, mv);
    W::store(v + i, vv);
    const auto mhat = W::mul(mv, ibc1);
    const auto vhat = W::mul(vv, ibc2);
    const auto pv = W::load(p + i);
    const auto upd = W::fmadd(wd, pv, W::div(mhat, W::add(W::sqrt(vhat), eps)));
    W::store(p + i, W::sub(pv, W::mul(lr, upd)));
  }
  for (; i < n; ++i) {
    m[i] = s.beta1 * m[i] + (T(1) - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (T(1) - s.beta2) * g[i] * g[i];
    const T mhat = m[i] / s.bias_correction1;
    const T vhat = v[i] / s.bias_correction2;
    p[i] -= s.lr * (mhat / (std::sqrt(vhat) + s.eps) + s.weight_decay * p[i]);
  }
}

double sq_diff_sum_f32(std::size_t n, const float* a, const float* b) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
    const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(d));
    const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(d, 1));
    acc0 = _mm256_fmadd_pd(lo, lo, acc0);
    acc1 = _mm256_fmadd_pd(hi, hi, acc1);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
  double acc = lanes[0] + lanes[1] + lanes[2] + lanes[3];
  for (; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return acc;
}

double sq_diff_sum_f64(std::size_t n, const double* a, const double* b) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double out = lanes[0] + lanes[1] + lanes[2] + lanes[3];
  for (; i < n; ++i) out += (a[i] - b[i]) * (a[i] - b[i]);
  return out;
}

const Kernels<float> kAvx2F32{"avx2",       gemm_avx2<float>,  axpy_avx2<float>, axpby_avx2<float>, silu_f32,
                              silu_backward_f32, adamw_avx2<float>, sq_diff_sum_f32};
const Kernels<double> kAvx2F64{"avx2",       gemm_avx2<double>,  axpy_avx2<double>, axpby_avx2<double>, silu_f64,
                               silu_backward_f64, adamw_avx2<double>, sq_diff_sum_f64};

}  // namespace

template <>
const Kernels<float>* avx2_kernels<float>() {
  return &kAvx2F32;
}

template <>
const Kernels<double>* avx2_kernels<double>() {
  return &kAvx2F64;
}

}  // namespace mapgen::simd
