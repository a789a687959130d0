#pragma once

#include <type_traits>

#include "mapgen/nn/params.hpp"
#include "mapgen/nn/tensor.hpp"

// Forward/backward primitives. Backward functions accumulate weight gradients into `grads`
// (skipped when null) and overwrite `dx` (skipped when null).
namespace mapgen::nn {

/// k x k convolution, stride 1, zero padding k / 2. Weights [cout, cin * k * k], bias [cout].
struct ConvDesc {
  int cin = 0;
  int cout = 0;
  int k = 3;
  int weight = -1;
  int bias = -1;
};

/// y = W x + b. Weights [out, in], bias [out].
struct LinearDesc {
  int in = 0;
  int out = 0;
  int weight = -1;
  int bias = -1;
};

template <typename T>
void conv_forward(const ParameterSet<T>& p, const ConvDesc& d, const Tensor<T>& x, Tensor<T>& y);
template <typename T>
void conv_backward(const ParameterSet<T>& p, const ConvDesc& d, const Tensor<T>& x, const Tensor<T>& dy,
                   Gradients<T>* grads, std::type_identity_t<Tensor<T>>* dx);

template <typename T>
void linear_forward(const ParameterSet<T>& p, const LinearDesc& d, const Tensor<T>& x, Tensor<T>& y);
template <typename T>
void linear_backward(const ParameterSet<T>& p, const LinearDesc& d, const Tensor<T>& x, const Tensor<T>& dy,
                     Gradients<T>* grads, std::type_identity_t<Tensor<T>>* dx);

template <typename T>
void silu_forward(const Tensor<T>& x, Tensor<T>& y);
/// dx = dy * silu'(x); x is the pre-activation.
template <typename T>
void silu_backward(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>& dx);

template <typename T>
void avgpool2_forward(const Tensor<T>& x, Tensor<T>& y);
template <typename T>
void avgpool2_backward(const Tensor<T>& dy, Tensor<T>& dx);

template <typename T>
void upsample2_forward(const Tensor<T>& x, Tensor<T>& y);
template <typename T>
void upsample2_backward(const Tensor<T>& dy, Tensor<T>& dx);

template <typename T>
void concat_channels(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& y);
template <typename T>
void split_channels(const Tensor<T>& dy, Tensor<T>& da, Tensor<T>& db);

/// y[n, c, :, :] += bias[n, c] where bias is an (n x c x 1 x 1) tensor.
template <typename T>
void add_channel_bias(Tensor<T>& y, const Tensor<T>& bias);
/// dbias[n, c] = sum over the plane of dy[n, c].
template <typename T>
void channel_bias_backward(const Tensor<T>& dy, Tensor<T>& dbias);

/// y += x (same shape)
template <typename T>
void add_inplace(Tensor<T>& y, const Tensor<T>& x);

}  // namespace mapgen::nn
