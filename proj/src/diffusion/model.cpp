#include "mapgen/diffusion/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mapgen/errors.hpp"
#include "mapgen/rng.hpp"

namespace mapgen::diffusion {

using nn::ParamGroup;
using nn::Tensor;

nlohmann::json arch_to_json(const Arch& a) {
  return {{"image_channels", a.image_channels}, {"channels", a.channels},       {"temb_dim", a.temb_dim},
          {"sinus_dim", a.sinus_dim},           {"cond_hidden", a.cond_hidden}, {"num_classes", a.num_classes},
          {"num_styles", a.num_styles}};
}

Arch arch_from_json(const nlohmann::json& j) {
  Arch a;
  a.image_channels = j.at("image_channels").get<int>();
  a.channels = j.at("channels").get<std::array<int, 3>>();
  a.temb_dim = j.at("temb_dim").get<int>();
  a.sinus_dim = j.at("sinus_dim").get<int>();
  a.cond_hidden = j.at("cond_hidden").get<int>();
  a.num_classes = j.at("num_classes").get<int>();
  a.num_styles = j.at("num_styles").get<int>();
  return a;
}

GroupMask base_pretrain_groups() {
  GroupMask m{};
  m[static_cast<int>(ParamGroup::kBaseEncoder)] = true;
  m[static_cast<int>(ParamGroup::kBaseEmbedding)] = true;
  m[static_cast<int>(ParamGroup::kBaseDecoder)] = true;
  return m;
}

GroupMask control_train_groups(bool sd_locked) {
  GroupMask m{};
  m[static_cast<int>(ParamGroup::kControlBranch)] = true;
  m[static_cast<int>(ParamGroup::kZeroConv)] = true;
  m[static_cast<int>(ParamGroup::kCondEncoder)] = true;
  if (!sd_locked) m[static_cast<int>(ParamGroup::kBaseDecoder)] = true;
  return m;
}

GroupMask all_groups() {
  GroupMask m{};
  m.fill(true);
  return m;
}

namespace {

template <typename T>
nn::ConvDesc add_conv(nn::ParameterSet<T>& p, const std::string& name, ParamGroup g, int cin, int cout, int k) {
  nn::ConvDesc d{cin, cout, k, -1, -1};
  d.weight = p.add(name + ".weight", g, {cout, cin, k, k});
  d.bias = p.add(name + ".bias", g, {cout});
  return d;
}

template <typename T>
nn::LinearDesc add_linear(nn::ParameterSet<T>& p, const std::string& name, ParamGroup g, int in, int out) {
  nn::LinearDesc d{in, out, -1, -1};
  d.weight = p.add(name + ".weight", g, {out, in});
  d.bias = p.add(name + ".bias", g, {out});
  return d;
}

template <typename T>
EncoderLayout add_encoder(nn::ParameterSet<T>& p, const std::string& prefix, ParamGroup g, const Arch& a) {
  const auto [c0, c1, c2] = a.channels;
  EncoderLayout L;
  L.in = add_conv(p, prefix + ".in", g, a.image_channels, c0, 3);
  L.e0 = add_conv(p, prefix + ".e0.conv", g, c0, c0, 3);
  L.pe0 = add_linear(p, prefix + ".e0.temb", g, a.temb_dim, c0);
  L.e1 = add_conv(p, prefix + ".e1.conv", g, c0, c1, 3);
  L.pe1 = add_linear(p, prefix + ".e1.temb", g, a.temb_dim, c1);
  L.m0 = add_conv(p, prefix + ".mid0.conv", g, c1, c2, 3);
  L.pm0 = add_linear(p, prefix + ".mid0.temb", g, a.temb_dim, c2);
  L.m1 = add_conv(p, prefix + ".mid1.conv", g, c2, c2, 3);
  return L;
}

template <typename T>
void sinusoidal(const std::vector<int>& t, int dim, Tensor<T>& out) {
  const int half = dim / 2;
  out.shape_as(static_cast<int>(t.size()), dim, 1, 1);
  for (std::size_t i = 0; i < t.size(); ++i) {
    T* row = out.sample(static_cast<int>(i));
    for (int k = 0; k < half; ++k) {
      const double freq = std::exp(-std::log(10000.0) * k / half);
      const double arg = t[i] * freq;
      row[k] = static_cast<T>(std::sin(arg));
      row[half + k] = static_cast<T>(std::cos(arg));
    }
  }
}

void copy_desc_values(auto& params, const nn::ConvDesc& from, const nn::ConvDesc& to) {
  params[to.weight].value = params[from.weight].value;
  params[to.bias].value = params[from.bias].value;
}
void copy_desc_values(auto& params, const nn::LinearDesc& from, const nn::LinearDesc& to) {
  params[to.weight].value = params[from.weight].value;
  params[to.bias].value = params[from.bias].value;
}

}  // namespace

template <typename T>
DiffusionModel<T>::DiffusionModel(const Arch& arch, std::uint64_t seed) : arch_(arch) {
  if (arch.sinus_dim % 2 != 0 || arch.sinus_dim <= 0) throw ConfigError("sinus_dim must be positive and even");
  for (int c : arch.channels)
    if (c <= 0) throw ConfigError("channel widths must be positive");
  auto& p = params_;
  auto& L = layout_;
  const auto [c0, c1, c2] = arch.channels;

  L.t1 = add_linear(p, "embed.t1", ParamGroup::kBaseEmbedding, arch.sinus_dim, arch.temb_dim);
  L.t2 = add_linear(p, "embed.t2", ParamGroup::kBaseEmbedding, arch.temb_dim, arch.temb_dim);
  L.style_table = p.add("embed.style", ParamGroup::kBaseEmbedding, {arch.num_styles, arch.temb_dim});

  L.base = add_encoder(p, "base", ParamGroup::kBaseEncoder, arch);
  L.d1 = add_conv(p, "dec.d1.conv", ParamGroup::kBaseDecoder, c2 + c1, c1, 3);
  L.pd1 = add_linear(p, "dec.d1.temb", ParamGroup::kBaseDecoder, arch.temb_dim, c1);
  L.d0 = add_conv(p, "dec.d0.conv", ParamGroup::kBaseDecoder, c1 + c0, c0, 3);
  L.pd0 = add_linear(p, "dec.d0.temb", ParamGroup::kBaseDecoder, arch.temb_dim, c0);
  L.out = add_conv(p, "dec.out", ParamGroup::kBaseDecoder, c0, arch.image_channels, 3);

  L.ctrl = add_encoder(p, "ctrl", ParamGroup::kControlBranch, arch);
  const int h = arch.cond_hidden;
  L.cond[0] = add_conv(p, "cond.c0", ParamGroup::kCondEncoder, arch.num_classes, h, 3);
  L.cond[1] = add_conv(p, "cond.c1", ParamGroup::kCondEncoder, h, h, 3);
  L.cond[2] = add_conv(p, "cond.c2", ParamGroup::kCondEncoder, h, h, 3);
  L.cond[3] = add_conv(p, "cond.c3", ParamGroup::kCondEncoder, h, c0, 3);
  L.z0 = add_conv(p, "zero.e0", ParamGroup::kZeroConv, c0, c0, 1);
  L.z1 = add_conv(p, "zero.e1", ParamGroup::kZeroConv, c1, c1, 1);
  L.zm = add_conv(p, "zero.mid", ParamGroup::kZeroConv, c2, c2, 1);

  Rng rng(mix_seed(seed, 0x1417));
  for (auto& prm : p) {
    if (prm.group == ParamGroup::kZeroConv) continue;
    if (prm.name == "embed.style") {
      for (auto& v : prm.value) v = static_cast<T>(0.5 * rng.normal());
      continue;
    }
    if (prm.shape.size() < 2) continue;  // biases start at zero
    int fan_in = 1;
    for (std::size_t i = 1; i < prm.shape.size(); ++i) fan_in *= prm.shape[i];
    const double bound = std::sqrt(3.0 / fan_in);
    for (auto& v : prm.value) v = static_cast<T>(rng.uniform(-bound, bound));
  }
  copy_base_encoder_to_control();
}

template <typename T>
void DiffusionModel<T>::copy_base_encoder_to_control() {
  const auto& b = layout_.base;
  const auto& c = layout_.ctrl;
  copy_desc_values(params_, b.in, c.in);
  copy_desc_values(params_, b.e0, c.e0);
  copy_desc_values(params_, b.e1, c.e1);
  copy_desc_values(params_, b.m0, c.m0);
  copy_desc_values(params_, b.m1, c.m1);
  copy_desc_values(params_, b.pe0, c.pe0);
  copy_desc_values(params_, b.pe1, c.pe1);
  copy_desc_values(params_, b.pm0, c.pm0);
}

template <typename T>
void DiffusionModel<T>::level_forward(const nn::ConvDesc& conv, const nn::LinearDesc& lin, const Tensor<T>& x,
                                      const Tensor<T>& temb, Tensor<T>& pre, Tensor<T>& out, Tensor<T>& proj) const {
  nn::conv_forward(params_, conv, x, pre);
  nn::linear_forward(params_, lin, temb, proj);
  nn::add_channel_bias(pre, proj);
  nn::silu_forward(pre, out);
}

template <typename T>
void DiffusionModel<T>::encoder_forward(const EncoderLayout& L, const Tensor<T>& x, const Tensor<T>* h0_add,
                                        const Tensor<T>& temb, EncoderCache<T>& c, Tensor<T>& proj) const {
  nn::conv_forward(params_, L.in, x, c.h0);
  if (h0_add) nn::add_inplace(c.h0, *h0_add);
  level_forward(L.e0, L.pe0, c.h0, temb, c.e0_pre, c.e0, proj);
  nn::avgpool2_forward(c.e0, c.p0);
  level_forward(L.e1, L.pe1, c.p0, temb, c.e1_pre, c.e1, proj);
  nn::avgpool2_forward(c.e1, c.p1);
  level_forward(L.m0, L.pm0, c.p1, temb, c.m0_pre, c.m0, proj);
  nn::conv_forward(params_, L.m1, c.m0, c.m_pre);
  nn::silu_forward(c.m_pre, c.m);
}

template <typename T>
void DiffusionModel<T>::forward(const ModelInput<T>& in, ForwardCache<T>& c) const {
  const int n = in.x.n;
  if (n == 0) throw DataError("empty batch");
  if (in.x.c != arch_.image_channels) throw DataError("input channel mismatch");
  if (in.x.h % 4 != 0 || in.x.w % 4 != 0) throw DataError("tile sides must be multiples of 4");
  if (static_cast<int>(in.t.size()) != n || static_cast<int>(in.style.size()) != n)
    throw DataError("t/style count must equal batch size");
  for (int s : in.style)
    if (s < 0 || s >= arch_.num_styles) throw DataError("style id out of range");
  if (in.control) {
    const auto& ct = *in.control;
    if (ct.n != n || ct.c != arch_.num_classes || ct.h != in.x.h || ct.w != in.x.w)
      throw DataError("control shape does not match input");
  }
  const auto& L = layout_;

  sinusoidal(in.t, arch_.sinus_dim, c.sinus);
  nn::linear_forward(params_, L.t1, c.sinus, c.l1_pre);
  nn::silu_forward(c.l1_pre, c.l1);
  nn::linear_forward(params_, L.t2, c.l1, c.temb_pre);
  const T* table = params_[L.style_table].value.data();
  for (int i = 0; i < n; ++i) {
    T* row = c.temb_pre.sample(i);
    const T* e = table + static_cast<std::size_t>(in.style[i]) * arch_.temb_dim;
    for (int k = 0; k < arch_.temb_dim; ++k) row[k] += e[k];
  }
  nn::silu_forward(c.temb_pre, c.temb);

  encoder_forward(L.base, in.x, nullptr, c.temb, c.base, c.proj);
  c.skip0 = c.base.e0;
  c.skip1 = c.base.e1;
  c.mid = c.base.m;

  c.with_control = in.control.has_value();
  if (c.with_control) {
    const Tensor<T>* src = &*in.control;
    for (int k = 0; k < 3; ++k) {
      nn::conv_forward(params_, L.cond[k], *src, c.cond_pre[k]);
      nn::silu_forward(c.cond_pre[k], c.cond_act[k]);
      src = &c.cond_act[k];
    }
    nn::conv_forward(params_, L.cond[3], *src, c.cond_out);
    encoder_forward(L.ctrl, in.x, &c.cond_out, c.temb, c.ctrl, c.proj);
    nn::conv_forward(params_, L.z0, c.ctrl.e0, c.zout);
    nn::add_inplace(c.skip0, c.zout);
    nn::conv_forward(params_, L.z1, c.ctrl.e1, c.zout);
    nn::add_inplace(c.skip1, c.zout);
    nn::conv_forward(params_, L.zm, c.ctrl.m, c.zout);
    nn::add_inplace(c.mid, c.zout);
  }

  nn::upsample2_forward(c.mid, c.u1);
  nn::concat_channels(c.u1, c.skip1, c.cat1);
  level_forward(L.d1, L.pd1, c.cat1, c.temb, c.d1_pre, c.d1, c.proj);
  nn::upsample2_forward(c.d1, c.u0);
  nn::concat_channels(c.u0, c.skip0, c.cat0);
  level_forward(L.d0, L.pd0, c.cat0, c.temb, c.d0_pre, c.d0, c.proj);
  nn::conv_forward(params_, L.out, c.d0, c.out);
}

template <typename T>
void DiffusionModel<T>::level_backward(const nn::ConvDesc& conv, const nn::LinearDesc& lin, const Tensor<T>& x,
                                       const Tensor<T>& pre, const Tensor<T>& dout, const Tensor<T>& temb,
                                       nn::Gradients<T>* g, Tensor<T>* dtemb, Tensor<T>* dx,
                                       typename ForwardCache<T>::Scratch& s) const {
  nn::silu_backward(pre, dout, s.dpre);
  if (g || dtemb) {
    nn::channel_bias_backward(s.dpre, s.dproj);
    nn::linear_backward(params_, lin, temb, s.dproj, g, dtemb ? &s.dtmp : nullptr);
    if (dtemb) nn::add_inplace(*dtemb, s.dtmp);
  }
  nn::conv_backward(params_, conv, x, s.dpre, g, dx);
}

template <typename T>
void DiffusionModel<T>::encoder_backward(const EncoderLayout& L, const Tensor<T>& x, const EncoderCache<T>& c,
                                         const Tensor<T>& temb, const Tensor<T>& de0, const Tensor<T>& de1,
                                         const Tensor<T>& dm, nn::Gradients<T>* g, Tensor<T>* dtemb, Tensor<T>* dh0,
                                         typename ForwardCache<T>::Scratch& s) const {
  nn::silu_backward(c.m_pre, dm, s.a);
  nn::conv_backward(params_, L.m1, c.m0, s.a, g, &s.b);
  level_backward(L.m0, L.pm0, c.p1, c.m0_pre, s.b, temb, g, dtemb, &s.c, s);
  nn::avgpool2_backward(s.c, s.d);
  nn::add_inplace(s.d, de1);
  level_backward(L.e1, L.pe1, c.p0, c.e1_pre, s.d, temb, g, dtemb, &s.c, s);
  nn::avgpool2_backward(s.c, s.d);
  nn::add_inplace(s.d, de0);
  level_backward(L.e0, L.pe0, c.h0, c.e0_pre, s.d, temb, g, dtemb, &s.c, s);
  if (g) nn::conv_backward(params_, L.in, x, s.c, g, nullptr);
  if (dh0) *dh0 = s.c;
}

template <typename T>
void DiffusionModel<T>::backward(const ModelInput<T>& in, ForwardCache<T>& c, const Tensor<T>& dout,
                                 const GroupMask& trainable, nn::Gradients<T>& grads) const {
  if (!dout.same_shape(c.out)) throw DataError("output gradient shape mismatch");
  const auto& L = layout_;
  auto& s = c.s;
  auto pick = [&](ParamGroup grp) { return has(trainable, grp) ? &grads : nullptr; };
  nn::Gradients<T>* g_dec = pick(ParamGroup::kBaseDecoder);
  nn::Gradients<T>* g_enc = pick(ParamGroup::kBaseEncoder);
  nn::Gradients<T>* g_ctrl = pick(ParamGroup::kControlBranch);
  nn::Gradients<T>* g_zero = pick(ParamGroup::kZeroConv);
  nn::Gradients<T>* g_cond = pick(ParamGroup::kCondEncoder);
  const bool train_embed = has(trainable, ParamGroup::kBaseEmbedding);
  const bool need_base_enc = g_enc || train_embed;
  const bool need_ctrl = c.with_control && (g_ctrl || g_cond || train_embed);
  const bool need_skips = need_base_enc || (c.with_control && (g_zero || need_ctrl));

  Tensor<T>* dtemb = nullptr;
  if (train_embed) {
    s.dtemb.reset(c.temb.n, c.temb.c, 1, 1);
    dtemb = &s.dtemb;
  }

  // decoder
  nn::conv_backward(params_, L.out, c.d0, dout, g_dec, &s.a);
  if (!g_dec && !need_skips && !dtemb) return;
  level_backward(L.d0, L.pd0, c.cat0, c.d0_pre, s.a, c.temb, g_dec, dtemb, &s.b, s);
  s.du.c = c.u0.c;
  nn::split_channels(s.b, s.du, s.dskip0);
  nn::upsample2_backward(s.du, s.a);
  level_backward(L.d1, L.pd1, c.cat1, c.d1_pre, s.a, c.temb, g_dec, dtemb, &s.b, s);
  s.du.c = c.u1.c;
  nn::split_channels(s.b, s.du, s.dskip1);
  nn::upsample2_backward(s.du, s.dmid);

  if (c.with_control && (g_zero || need_ctrl)) {
    nn::conv_backward(params_, L.z0, c.ctrl.e0, s.dskip0, g_zero, need_ctrl ? &s.dc0 : nullptr);
    nn::conv_backward(params_, L.z1, c.ctrl.e1, s.dskip1, g_zero, need_ctrl ? &s.dc1 : nullptr);
    nn::conv_backward(params_, L.zm, c.ctrl.m, s.dmid, g_zero, need_ctrl ? &s.dcm : nullptr);
    if (need_ctrl) {
      Tensor<T> dh0;
      encoder_backward(L.ctrl, in.x, c.ctrl, c.temb, s.dc0, s.dc1, s.dcm, g_ctrl, dtemb, g_cond ? &dh0 : nullptr,
                       s);
      if (g_cond) {
        nn::conv_backward(params_, L.cond[3], c.cond_act[2], dh0, g_cond, &s.a);
        for (int k = 2; k >= 0; --k) {
          nn::silu_backward(c.cond_pre[k], s.a, s.b);
          const Tensor<T>& src = k == 0 ? *in.control : c.cond_act[k - 1];
          nn::conv_backward(params_, L.cond[k], src, s.b, g_cond, k == 0 ? nullptr : &s.a);
        }
      }
    }
  }

  if (need_base_enc)
    encoder_backward(L.base, in.x, c.base, c.temb, s.dskip0, s.dskip1, s.dmid, g_enc, dtemb, nullptr, s);

  if (train_embed) {
    nn::silu_backward(c.temb_pre, s.dtemb, s.a);
    T* dtable = grads.g[L.style_table].data();
    for (int i = 0; i < s.a.n; ++i) {
      const T* row = s.a.sample(i);
      T* e = dtable + static_cast<std::size_t>(in.style[i]) * arch_.temb_dim;
      for (int k = 0; k < arch_.temb_dim; ++k) e[k] += row[k];
    }
    nn::linear_backward(params_, L.t2, c.l1, s.a, &grads, &s.b);
    nn::silu_backward(c.l1_pre, s.b, s.c);
    nn::linear_backward(params_, L.t1, c.sinus, s.c, &grads, nullptr);
  }
}

template <typename T>
Tensor<T> DiffusionModel<T>::predict_noise(const ModelInput<T>& in) const {
  ForwardCache<T> cache;
  forward(in, cache);
  return std::move(cache.out);
}

template <typename T>
void encode_image(const RgbImage& img, T* dst) {
  const std::size_t plane = static_cast<std::size_t>(img.width()) * img.height();
  const auto px = img.pixels();
  for (std::size_t i = 0; i < plane; ++i) {
    dst[i] = static_cast<T>(px[i].r / 127.5 - 1.0);
    dst[plane + i] = static_cast<T>(px[i].g / 127.5 - 1.0);
    dst[2 * plane + i] = static_cast<T>(px[i].b / 127.5 - 1.0);
  }
}

template <typename T>
RgbImage decode_image(const T* src, int width, int height) {
  RgbImage img(width, height);
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  auto px = img.pixels();
  auto to_u8 = [](T v) {
    const double c = std::clamp(static_cast<double>(v), -1.0, 1.0);
    return static_cast<std::uint8_t>(std::lround((c + 1.0) * 127.5));
  };
  for (std::size_t i = 0; i < plane; ++i) px[i] = Rgb{to_u8(src[i]), to_u8(src[plane + i]), to_u8(src[2 * plane + i])};
  return img;
}

template <typename T>
void encode_control(const LabelImage& labels, int num_classes, T* dst) {
  const std::size_t plane = static_cast<std::size_t>(labels.width()) * labels.height();
  std::fill(dst, dst + plane * num_classes, T(0));
  const auto px = labels.pixels();
  for (std::size_t i = 0; i < plane; ++i) {
    if (px[i] >= num_classes) throw DataError("control label outside the model's class range");
    dst[static_cast<std::size_t>(px[i]) * plane + i] = T(1);
  }
}

template class DiffusionModel<float>;
template class DiffusionModel<double>;
template void encode_image<float>(const RgbImage&, float*);
template void encode_image<double>(const RgbImage&, double*);
template RgbImage decode_image<float>(const float*, int, int);
template RgbImage decode_image<double>(const double*, int, int);
template void encode_control<float>(const LabelImage&, int, float*);
template void encode_control<double>(const LabelImage&, int, double*);

}  // namespace mapgen::diffusion
