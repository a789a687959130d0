#include "mapgen/nn/ops.hpp"

#include <cassert>
#include <cstring>

#include "mapgen/simd/kernels.hpp"

namespace mapgen::nn {

namespace {

template <typename T>
std::vector<T>& scratch(int slot) {
  thread_local std::vector<T> buffers[2];
  return buffers[slot];
}

// col[(ci * k + ky) * k + kx][y * w + x] = x[ci][y + ky - k/2][x + kx - k/2]
template <typename T>
void im2col(const T* x, int c, int h, int w, int k, T* col) {
  const int pad = k / 2;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int ci = 0; ci < c; ++ci) {
    const T* src = x + ci * plane;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* dst = col + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * plane;
        const int dx = kx - pad;
        const int x0 = std::max(0, -dx);
        const int x1 = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - pad;
          T* row = dst + static_cast<std::size_t>(y) * w;
          if (sy < 0 || sy >= h) {
            std::memset(row, 0, sizeof(T) * w);
            continue;
          }
          const T* srow = src + static_cast<std::size_t>(sy) * w;
          for (int xx = 0; xx < x0; ++xx) row[xx] = T(0);
          if (x1 > x0) std::memcpy(row + x0, srow + x0 + dx, sizeof(T) * (x1 - x0));
          for (int xx = std::max(x1, x0); xx < w; ++xx) row[xx] = T(0);
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, int c, int h, int w, int k, T* x) {
  const int pad = k / 2;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::fill(x, x + c * plane, T(0));
  for (int ci = 0; ci < c; ++ci) {
    T* dst = x + ci * plane;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* src = col + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * plane;
        const int dx = kx - pad;
        const int x0 = std::max(0, -dx);
        const int x1 = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= h) continue;
          const T* row = src + static_cast<std::size_t>(y) * w;
          T* drow = dst + static_cast<std::size_t>(sy) * w;
          for (int xx = x0; xx < x1; ++xx) drow[xx + dx] += row[xx];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
void conv_forward(const ParameterSet<T>& p, const ConvDesc& d, const Tensor<T>& x, Tensor<T>& y) {
  if (x.c != d.cin) throw DataError("conv input channel mismatch");
  const auto& K = simd::active_kernels<T>();
  const int hw = x.h * x.w;
  const int kk = d.cin * d.k * d.k;
  y.shape_as(x.n, d.cout, x.h, x.w);
  const T* wt = p[d.weight].value.data();
  const T* bias = p[d.bias].value.data();
  auto& col = scratch<T>(0);
  if (d.k > 1) col.resize(static_cast<std::size_t>(kk) * hw);
  for (int i = 0; i < x.n; ++i) {
    T* out = y.sample(i);
    for (int co = 0; co < d.cout; ++co) std::fill(out + co * hw, out + (co + 1) * hw, bias[co]);
    const T* src = x.sample(i);
    if (d.k > 1) {
      im2col(src, d.cin, x.h, x.w, d.k, col.data());
      src = col.data();
    }
    K.gemm(false, false, d.cout, hw, kk, T(1), wt, kk, src, hw, T(1), out, hw);
  }
}

template <typename T>
void conv_backward(const ParameterSet<T>& p, const ConvDesc& d, const Tensor<T>& x, const Tensor<T>& dy,
                   Gradients<T>* grads, std::type_identity_t<Tensor<T>>* dx) {
  const auto& K = simd::active_kernels<T>();
  const int hw = x.h * x.w;
  const int kk = d.cin * d.k * d.k;
  if (dx) dx->shape_as(x.n, x.c, x.h, x.w);
  auto& col = scratch<T>(0);
  auto& dcol = scratch<T>(1);
  if (d.k > 1) {
    col.resize(static_cast<std::size_t>(kk) * hw);
    dcol.resize(static_cast<std::size_t>(kk) * hw);
  }
  const T* wt = p[d.weight].value.data();
  for (int i = 0; i < x.n; ++i) {
    const T* g = dy.sample(i);
    if (grads) {
      const T* src = x.sample(i);
      if (d.k > 1) {
        im2col(src, d.cin, x.h, x.w, d.k, col.data());
        src = col.data();
      }
      K.gemm(false, true, d.cout, kk, hw, T(1), g, hw, src, hw, T(1), grads->g[d.weight].data(), kk);
      T* db = grads->g[d.bias].data();
      for (int co = 0; co < d.cout; ++co) {
        T s = 0;
        const T* row = g + co * hw;
        for (int j = 0; j < hw; ++j) s += row[j];
        db[co] += s;
      }
    }
    if (dx) {
      if (d.k > 1) {
        K.gemm(true, false, kk, hw, d.cout, T(1), wt, kk, g, hw, T(0), dcol.data(), hw);
        col2im(dcol.data(), d.cin, x.h, x.w, d.k, dx->sample(i));
      } else {
        K.gemm(true, false, kk, hw, d.cout, T(1), wt, kk, g, hw, T(0), dx->sample(i), hw);
      }
    }
  }
}

template <typename T>
void linear_forward(const ParameterSet<T>& p, const LinearDesc& d, const Tensor<T>& x, Tensor<T>& y) {
  if (static_cast<int>(x.sample_size()) != d.in) throw DataError("linear input size mismatch");
  const auto& K = simd::active_kernels<T>();
  y.shape_as(x.n, d.out, 1, 1);
  const T* bias = p[d.bias].value.data();
  for (int i = 0; i < x.n; ++i) std::copy(bias, bias + d.out, y.sample(i));
  K.gemm(false, true, x.n, d.out, d.in, T(1), x.data.data(), d.in, p[d.weight].value.data(), d.in, T(1),
         y.data.data(), d.out);
}

template <typename T>
void linear_backward(const ParameterSet<T>& p, const LinearDesc& d, const Tensor<T>& x, const Tensor<T>& dy,
                     Gradients<T>* grads, std::type_identity_t<Tensor<T>>* dx) {
  const auto& K = simd::active_kernels<T>();
  if (grads) {
    K.gemm(true, false, d.out, d.in, x.n, T(1), dy.data.data(), d.out, x.data.data(), d.in, T(1),
           grads->g[d.weight].data(), d.in);
    T* db = grads->g[d.bias].data();
    for (int i = 0; i < x.n; ++i) K.axpy(d.out, T(1), dy.sample(i), db);
  }
  if (dx) {
    dx->shape_as(x.n, x.c, x.h, x.w);
    K.gemm(false, false, x.n, d.in, d.out, T(1), dy.data.data(), d.out, p[d.weight].value.data(), d.in, T(0),
           dx->data.data(), d.in);
  }
}

template <typename T>
void silu_forward(const Tensor<T>& x, Tensor<T>& y) {
  y.shape_as(x.n, x.c, x.h, x.w);
  simd::active_kernels<T>().silu(x.size(), x.data.data(), y.data.data());
}

template <typename T>
void silu_backward(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>& dx) {
  dx.shape_as(x.n, x.c, x.h, x.w);
  simd::active_kernels<T>().silu_backward(x.size(), x.data.data(), dy.data.data(), dx.data.data());
}

template <typename T>
void avgpool2_forward(const Tensor<T>& x, Tensor<T>& y) {
  if (x.h % 2 || x.w % 2) throw DataError("avgpool2 needs even spatial dims");
  const int oh = x.h / 2, ow = x.w / 2;
  y.shape_as(x.n, x.c, oh, ow);
  const int planes = x.n * x.c;
  for (int pl = 0; pl < planes; ++pl) {
    const T* s = x.data.data() + static_cast<std::size_t>(pl) * x.h * x.w;
    T* o = y.data.data() + static_cast<std::size_t>(pl) * oh * ow;
    for (int yy = 0; yy < oh; ++yy) {
      const T* r0 = s + (2 * yy) * x.w;
      const T* r1 = r0 + x.w;
      for (int xx = 0; xx < ow; ++xx)
        o[yy * ow + xx] = T(0.25) * (r0[2 * xx] + r0[2 * xx + 1] + r1[2 * xx] + r1[2 * xx + 1]);
    }
  }
}

template <typename T>
void avgpool2_backward(const Tensor<T>& dy, Tensor<T>& dx) {
  const int h = dy.h * 2, w = dy.w * 2;
  dx.shape_as(dy.n, dy.c, h, w);
  const int planes = dy.n * dy.c;
  for (int pl = 0; pl < planes; ++pl) {
    const T* g = dy.data.data() + static_cast<std::size_t>(pl) * dy.h * dy.w;
    T* o = dx.data.data() + static_cast<std::size_t>(pl) * h * w;
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx) o[yy * w + xx] = T(0.25) * g[(yy / 2) * dy.w + xx / 2];
  }
}

template <typename T>
void upsample2_forward(const Tensor<T>& x, Tensor<T>& y) {
  const int h = x.h * 2, w = x.w * 2;
  y.shape_as(x.n, x.c, h, w);
  const int planes = x.n * x.c;
  for (int pl = 0; pl < planes; ++pl) {
    const T* s = x.data.data() + static_cast<std::size_t>(pl) * x.h * x.w;
    T* o = y.data.data() + static_cast<std::size_t>(pl) * h * w;
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx) o[yy * w + xx] = s[(yy / 2) * x.w + xx / 2];
  }
}

template <typename T>
void upsample2_backward(const Tensor<T>& dy, Tensor<T>& dx) {
  const int oh = dy.h / 2, ow = dy.w / 2;
  dx.shape_as(dy.n, dy.c, oh, ow);
  const int planes = dy.n * dy.c;
  for (int pl = 0; pl < planes; ++pl) {
    const T* g = dy.data.data() + static_cast<std::size_t>(pl) * dy.h * dy.w;
    T* o = dx.data.data() + static_cast<std::size_t>(pl) * oh * ow;
    for (int yy = 0; yy < oh; ++yy) {
      const T* r0 = g + (2 * yy) * dy.w;
      const T* r1 = r0 + dy.w;
      for (int xx = 0; xx < ow; ++xx) o[yy * ow + xx] = r0[2 * xx] + r0[2 * xx + 1] + r1[2 * xx] + r1[2 * xx + 1];
    }
  }
}

template <typename T>
void concat_channels(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& y) {
  if (a.n != b.n || a.h != b.h || a.w != b.w) throw DataError("concat shape mismatch");
  y.shape_as(a.n, a.c + b.c, a.h, a.w);
  for (int i = 0; i < a.n; ++i) {
    std::copy(a.sample(i), a.sample(i) + a.sample_size(), y.sample(i));
    std::copy(b.sample(i), b.sample(i) + b.sample_size(), y.sample(i) + a.sample_size());
  }
}

template <typename T>
void split_channels(const Tensor<T>& dy, Tensor<T>& da, Tensor<T>& db) {
  // da and db must already carry their channel counts
  da.shape_as(dy.n, da.c, dy.h, dy.w);
  db.shape_as(dy.n, dy.c - da.c, dy.h, dy.w);
  for (int i = 0; i < dy.n; ++i) {
    const T* s = dy.sample(i);
    std::copy(s, s + da.sample_size(), da.sample(i));
    std::copy(s + da.sample_size(), s + dy.sample_size(), db.sample(i));
  }
}

template <typename T>
void add_channel_bias(Tensor<T>& y, const Tensor<T>& bias) {
  const std::size_t plane = y.plane();
  for (int i = 0; i < y.n; ++i)
    for (int c = 0; c < y.c; ++c) {
      const T b = bias.data[static_cast<std::size_t>(i) * y.c + c];
      T* row = y.sample(i) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) row[j] += b;
    }
}

template <typename T>
void channel_bias_backward(const Tensor<T>& dy, Tensor<T>& dbias) {
  dbias.shape_as(dy.n, dy.c, 1, 1);
  const std::size_t plane = dy.plane();
  for (int i = 0; i < dy.n; ++i)
    for (int c = 0; c < dy.c; ++c) {
      const T* row = dy.sample(i) + c * plane;
      T s = 0;
      for (std::size_t j = 0; j < plane; ++j) s += row[j];
      dbias.data[static_cast<std::size_t>(i) * dy.c + c] = s;
    }
}

template <typename T>
void add_inplace(Tensor<T>& y, const Tensor<T>& x) {
  if (!y.same_shape(x)) throw DataError("add shape mismatch");
  simd::active_kernels<T>().axpy(y.size(), T(1), x.data.data(), y.data.data());
}

#define MAPGEN_NN_INSTANTIATE(T)                                                                              \
  template void conv_forward<T>(const ParameterSet<T>&, const ConvDesc&, const Tensor<T>&, Tensor<T>&);     \
  template void conv_backward<T>(const ParameterSet<T>&, const ConvDesc&, const Tensor<T>&, const Tensor<T>&, \
                                 Gradients<T>*, Tensor<T>*);                                                  \
  template void linear_forward<T>(const ParameterSet<T>&, const LinearDesc&, const Tensor<T>&, Tensor<T>&); \
  template void linear_backward<T>(const ParameterSet<T>&, const LinearDesc&, const Tensor<T>&,              \
                                   const Tensor<T>&, Gradients<T>*, Tensor<T>*);                              \
  template void silu_forward<T>(const Tensor<T>&, Tensor<T>&);                                                \
  template void silu_backward<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>&);                             \
  template void avgpool2_forward<T>(const Tensor<T>&, Tensor<T>&);                                            \
  template void avgpool2_backward<T>(const Tensor<T>&, Tensor<T>&);                                           \
  template void upsample2_forward<T>(const Tensor<T>&, Tensor<T>&);                                           \
  template void upsample2_backward<T>(const Tensor<T>&, Tensor<T>&);                                          \
  template void concat_channels<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>&);                           \
  template void split_channels<T>(const Tensor<T>&, Tensor<T>&, Tensor<T>&);                                  \
  template void add_channel_bias<T>(Tensor<T>&, const Tensor<T>&);                                            \
  template void channel_bias_backward<T>(const Tensor<T>&, Tensor<T>&);                                       \
  template void add_inplace<T>(Tensor<T>&, const Tensor<T>&);

MAPGEN_NN_INSTANTIATE(float)
MAPGEN_NN_INSTANTIATE(double)

}  // namespace mapgen::nn
