#include <doctest.h>

#include <cmath>
#include <vector>

#include "mapgen/rng.hpp"
#include "mapgen/simd/kernels.hpp"

using namespace mapgen;
using namespace mapgen::simd;

namespace {

template <typename T>
std::vector<T> random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
  return v;
}

template <typename T>
constexpr double rel_tol() {
  return sizeof(T) == 4 ? 2e-5 : 1e-12;
}

// Naive triple loop in double: the oracle both variants are held to.
template <typename T>
void gemm_oracle(bool ta, bool tb, int m, int n, int k, double alpha, const std::vector<T>& a, int lda,
                 const std::vector<T>& b, int ldb, double beta, std::vector<double>& c, std::vector<double>& mag,
                 int ldc) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0, s_abs = 0.0;
      for (int p = 0; p < k; ++p) {
        const double av = ta ? a[p * lda + i] : a[i * lda + p];
        const double bv = tb ? b[j * ldb + p] : b[p * ldb + j];
        s += av * bv;
        s_abs += std::abs(av * bv);
      }
      c[i * ldc + j] = alpha * s + beta * c[i * ldc + j];
      mag[i * ldc + j] = std::abs(alpha) * s_abs + std::abs(beta * c[i * ldc + j]) + 1e-30;
    }
}

template <typename T>
void check_gemm(const Kernels<T>& K, bool ta, bool tb, int m, int n, int k, double alpha, double beta) {
  Rng rng(static_cast<std::uint64_t>(m * 131 + n * 17 + k + ta * 7 + tb * 3));
  const int lda = ta ? m + 1 : k + 2;
  const int ldb = tb ? k + 3 : n + 1;
  const int ldc = n + 2;
  const auto a = random_vec<T>(rng, static_cast<std::size_t>(ta ? k : m) * lda);
  const auto b = random_vec<T>(rng, static_cast<std::size_t>(tb ? n : k) * ldb);
  auto c = random_vec<T>(rng, static_cast<std::size_t>(m) * ldc);
  std::vector<double> ref(c.begin(), c.end()), mag(ref.size(), 1.0);
  gemm_oracle(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, ref, mag, ldc);
  K.gemm(ta, tb, m, n, k, static_cast<T>(alpha), a.data(), lda, b.data(), ldb, static_cast<T>(beta), c.data(), ldc);
  double worst = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(c[i * ldc + j] - ref[i * ldc + j]) / mag[i * ldc + j]);
  INFO(K.name << " ta=" << ta << " tb=" << tb << " m=" << m << " n=" << n << " k=" << k);
  CHECK(worst <= rel_tol<T>());
}

template <typename T>
std::vector<const Kernels<T>*> variants() {
  std::vector<const Kernels<T>*> v{&scalar_kernels<T>()};
  if (avx2_kernels<T>() && cpu_supports_avx2_fma()) v.push_back(avx2_kernels<T>());
  return v;
}

}  // namespace

TEST_CASE_TEMPLATE("gemm variants match the naive product", T, float, double) {
  const int shapes[][3] = {{1, 1, 1},   {7, 5, 3},    {6, 16, 8},   {13, 33, 29}, {32, 1024, 288},
                           {45, 100, 7}, {121, 17, 300}, {3, 2000, 5}, {64, 64, 1100}};
  for (const auto* K : variants<T>())
    for (const auto& s : shapes)
      for (int ta = 0; ta < 2; ++ta)
        for (int tb = 0; tb < 2; ++tb) {
          check_gemm<T>(*K, ta, tb, s[0], s[1], s[2], 1.0, 0.0);
          check_gemm<T>(*K, ta, tb, s[0], s[1], s[2], -0.5, 1.0);
        }
}

TEST_CASE("gemm with beta = 0 ignores NaN garbage in C") {
  for (const auto* K : variants<float>()) {
    std::vector<float> a{1, 2, 3, 4}, b{5, 6, 7, 8}, c(4, std::nanf(""));
    K->gemm(false, false, 2, 2, 2, 1.0f, a.data(), 2, b.data(), 2, 0.0f, c.data(), 2);
    CHECK(c == std::vector<float>{19, 22, 43, 50});
  }
}

TEST_CASE_TEMPLATE("elementwise kernels agree with the scalar reference", T, float, double) {
  const auto& ref = scalar_kernels<T>();
  const auto* fast = avx2_kernels<T>();
  if (!fast || !cpu_supports_avx2_fma()) return;
  const double tol = sizeof(T) == 4 ? 1e-5 : 1e-13;
  for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{7}, std::size_t{8}, std::size_t{33},
                        std::size_t{1000}, std::size_t{4099}}) {
    Rng rng(n + 11);
    const auto x = random_vec<T>(rng, n, -12.0, 12.0);
    const auto y = random_vec<T>(rng, n);
    const auto dy = random_vec<T>(rng, n);

    auto y1 = y, y2 = y;
    ref.axpy(n, T(0.7), x.data(), y1.data());
    fast->axpy(n, T(0.7), x.data(), y2.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= tol * (1 + std::abs(y1[i])));

    std::vector<T> o1(n), o2(n);
    ref.axpby(n, T(1.5), x.data(), T(-2), y.data(), o1.data());
    fast->axpby(n, T(1.5), x.data(), T(-2), y.data(), o2.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(o1[i] - o2[i]) <= tol * (1 + std::abs(o1[i])));

    ref.silu(n, x.data(), o1.data());
    fast->silu(n, x.data(), o2.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(o1[i] - o2[i]) <= 4 * tol * (1 + std::abs(o1[i])));

    ref.silu_backward(n, x.data(), dy.data(), o1.data());
    fast->silu_backward(n, x.data(), dy.data(), o2.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(o1[i] - o2[i]) <= 4 * tol * (1 + std::abs(o1[i])));

    const double s1 = ref.sq_diff_sum(n, x.data(), y.data());
    const double s2 = fast->sq_diff_sum(n, x.data(), y.data());
    CHECK(std::abs(s1 - s2) <= 1e-7 * (1 + s1));

    auto p1 = y, p2 = y;
    std::vector<T> m1(n, T(0.01)), m2 = m1, v1(n, T(0.02)), v2 = v1;
    const AdamWStep<T> st{T(1e-3), T(0.9), T(0.999), T(1e-8), T(1e-2), T(0.1), T(0.001)};
    ref.adamw(n, p1.data(), dy.data(), m1.data(), v1.data(), st);
    fast->adamw(n, p2.data(), dy.data(), m2.data(), v2.data(), st);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(p1[i] - p2[i]) <= tol * (1 + std::abs(p1[i])));
      CHECK(std::abs(m1[i] - m2[i]) <= tol);
      CHECK(std::abs(v1[i] - v2[i]) <= tol);
    }
  }
}

TEST_CASE("silu reference matches the closed form") {
  const auto& K = scalar_kernels<double>();
  const std::vector<double> x{-30.0, -2.0, 0.0, 0.5, 3.0, 40.0};
  std::vector<double> y(x.size()), d(x.size()), one(x.size(), 1.0);
  K.silu(x.size(), x.data(), y.data());
  K.silu_backward(x.size(), x.data(), one.data(), d.data());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = 1.0 / (1.0 + std::exp(-x[i]));
    CHECK(y[i] == doctest::Approx(x[i] * s).epsilon(1e-14));
    CHECK(d[i] == doctest::Approx(s * (1 + x[i] * (1 - s))).epsilon(1e-12));
  }
}

TEST_CASE("active kernels pick a known variant") {
  const auto& K = active_kernels<float>();
  CHECK((K.name == "scalar" || K.name == "avx2"));
  if (cpu_supports_avx2_fma() && avx2_kernels<float>() && !std::getenv("MAPGEN_KERNELS")) CHECK(K.name == "avx2");
}
