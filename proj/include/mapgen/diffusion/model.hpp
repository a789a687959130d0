#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "mapgen/classes.hpp"
#include "mapgen/image.hpp"
#include "mapgen/nn/ops.hpp"
#include "mapgen/styles.hpp"

namespace mapgen::diffusion {

/// Shape of the denoiser. Three resolution levels (full, 1/2, 1/4); the last is the bottleneck.
struct Arch {
  int image_channels = 3;
  std::array<int, 3> channels{32, 48, 64};
  int temb_dim = 64;
  int sinus_dim = 32;
  int cond_hidden = 16;
  int num_classes = kNumClasses;
  int num_styles = kNumStyles;

  friend bool operator==(const Arch&, const Arch&) = default;
};

nlohmann::json arch_to_json(const Arch& a);
Arch arch_from_json(const nlohmann::json& j);

using GroupMask = std::array<bool, nn::kNumParamGroups>;

inline bool has(const GroupMask& m, nn::ParamGroup g) { return m[static_cast<int>(g)]; }
/// Base encoder, embedding and decoder.
GroupMask base_pretrain_groups();
/// Control branch, zero convolutions and condition encoder, plus the base decoder when
/// sd_locked is false.
GroupMask control_train_groups(bool sd_locked);
GroupMask all_groups();

/// Network input for a batch of n tiles.
template <typename T>
struct ModelInput {
  nn::Tensor<T> x;                       // n x 3 x H x W, noised image
  std::vector<int> t;                    // diffusion step per item, 1-based
  std::vector<int> style;                // style id per item
  std::optional<nn::Tensor<T>> control;  // n x num_classes x H x W one-hot labels
};

/// Activations of one encoder pass (base or control copy).
template <typename T>
struct EncoderCache {
  nn::Tensor<T> h0, e0_pre, e0, p0, e1_pre, e1, p1, m0_pre, m0, m_pre, m;
};

/// Everything the backward pass needs; also scratch space. One per thread.
template <typename T>
struct ForwardCache {
  nn::Tensor<T> sinus, l1_pre, l1, temb_pre, temb;
  EncoderCache<T> base;
  EncoderCache<T> ctrl;
  std::array<nn::Tensor<T>, 3> cond_pre, cond_act;
  nn::Tensor<T> cond_out;
  nn::Tensor<T> skip0, skip1, mid, zout;
  nn::Tensor<T> u1, cat1, d1_pre, d1, u0, cat0, d0_pre, d0;
  nn::Tensor<T> out;
  nn::Tensor<T> proj;
  bool with_control = false;
  struct Scratch {
    nn::Tensor<T> a, b, c, d, dpre, dproj, dtmp, dtemb, dskip0, dskip1, dmid, dc0, dc1, dcm, du;
  } s;
};

struct EncoderLayout {
  nn::ConvDesc in, e0, e1, m0, m1;
  nn::LinearDesc pe0, pe1, pm0;
};

struct ModelLayout {
  nn::LinearDesc t1, t2;
  int style_table = -1;
  EncoderLayout base, ctrl;
  nn::ConvDesc d1, d0, out;
  nn::LinearDesc pd1, pd0;
  std::array<nn::ConvDesc, 4> cond;
  nn::ConvDesc z0, z1, zm;
};

/// Pixel-space denoiser with a locked base U-Net and a zero-coupled trainable encoder copy.
///
/// The forward pass is const; concurrent callers each bring their own ForwardCache, so one
/// model can serve many sampling threads.
template <typename T>
class DiffusionModel {
 public:
  /// Random init; every zero-convolution weight and bias is exactly 0.
  DiffusionModel(const Arch& arch, std::uint64_t seed);

  const Arch& arch() const { return arch_; }
  const ModelLayout& layout() const { return layout_; }
  nn::ParameterSet<T>& params() { return params_; }
  const nn::ParameterSet<T>& params() const { return params_; }

  void forward(const ModelInput<T>& in, ForwardCache<T>& cache) const;

  /// Accumulates d(loss)/d(param) into grads for every parameter in a trainable group.
  /// Parameters outside `trainable` get no gradient. Must follow forward() on the same cache.
  void backward(const ModelInput<T>& in, ForwardCache<T>& cache, const nn::Tensor<T>& dout,
                const GroupMask& trainable, nn::Gradients<T>& grads) const;

  nn::Tensor<T> predict_noise(const ModelInput<T>& in) const;

  /// Initializes the control branch as an exact copy of the base encoder and bottleneck.
  void copy_base_encoder_to_control();

  template <typename U>
  DiffusionModel<U> cast() const {
    DiffusionModel<U> m(arch_, 0);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto& src = params_[i].value;
      auto& dst = m.params()[i].value;
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] = static_cast<U>(src[j]);
    }
    return m;
  }

 private:
  void encoder_forward(const EncoderLayout& L, const nn::Tensor<T>& x, const nn::Tensor<T>* h0_add,
                       const nn::Tensor<T>& temb, EncoderCache<T>& c, nn::Tensor<T>& proj) const;
  void level_forward(const nn::ConvDesc& conv, const nn::LinearDesc& lin, const nn::Tensor<T>& x,
                     const nn::Tensor<T>& temb, nn::Tensor<T>& pre, nn::Tensor<T>& out, nn::Tensor<T>& proj) const;
  void level_backward(const nn::ConvDesc& conv, const nn::LinearDesc& lin, const nn::Tensor<T>& x,
                      const nn::Tensor<T>& pre, const nn::Tensor<T>& dout, const nn::Tensor<T>& temb,
                      nn::Gradients<T>* g, nn::Tensor<T>* dtemb, nn::Tensor<T>* dx,
                      typename ForwardCache<T>::Scratch& s) const;
  void encoder_backward(const EncoderLayout& L, const nn::Tensor<T>& x, const EncoderCache<T>& c,
                        const nn::Tensor<T>& temb, const nn::Tensor<T>& de0, const nn::Tensor<T>& de1,
                        const nn::Tensor<T>& dm, nn::Gradients<T>* g, nn::Tensor<T>* dtemb, nn::Tensor<T>* dh0,
                        typename ForwardCache<T>::Scratch& s) const;

  Arch arch_;
  ModelLayout layout_;
  nn::ParameterSet<T> params_;
};

/// Pixel <-> tensor conversion. Images map to [-1, 1]; decoding clamps and rounds.
template <typename T>
void encode_image(const RgbImage& img, T* dst);
template <typename T>
RgbImage decode_image(const T* src, int width, int height);
/// One-hot planes, num_classes x H x W.
template <typename T>
void encode_control(const LabelImage& labels, int num_classes, T* dst);

}  // namespace mapgen::diffusion
