#include "mapgen/diffusion/trainer.hpp"

#include <cmath>

#include "mapgen/errors.hpp"
#include "mapgen/simd/kernels.hpp"

namespace mapgen::diffusion {

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (log_every < 1) throw ConfigError("log_every must be >= 1");
  if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
}

nlohmann::json config_to_json(const TrainingConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}, {"max_steps", c.max_steps},
          {"log_every", c.log_every},         {"sd_locked", c.sd_locked},   {"weight_decay", c.weight_decay},
          {"beta1", c.beta1},                 {"beta2", c.beta2},           {"adam_eps", c.adam_eps},
          {"seed", c.seed}};
}

TrainingConfig config_from_json(const nlohmann::json& j) {
  TrainingConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.log_every = j.value("log_every", c.log_every);
  c.sd_locked = j.value("sd_locked", c.sd_locked);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

template <typename T>
NoisedBatch<T> make_noised_batch(const std::vector<const DatasetTriple*>& batch, const NoiseSchedule& schedule,
                                 Rng& rng, bool with_control, int num_classes) {
  if (batch.empty()) throw DataError("empty training batch");
  const int w = batch.front()->target.width();
  const int h = batch.front()->target.height();
  const int n = static_cast<int>(batch.size());
  NoisedBatch<T> nb;
  auto& in = nb.input;
  in.x.reset(n, 3, h, w);
  nb.eps.reset(n, 3, h, w);
  if (with_control) in.control.emplace(n, num_classes, h, w);
  std::vector<T> x0(in.x.sample_size());
  for (int i = 0; i < n; ++i) {
    const DatasetTriple& tr = *batch[i];
    if (tr.target.width() != w || tr.target.height() != h || tr.control.width() != w || tr.control.height() != h)
      throw DataError("batch triples must share tile dimensions");
    const int t = static_cast<int>(rng.uniform_int(1, schedule.T));
    in.t.push_back(t);
    in.style.push_back(static_cast<int>(tr.style));
    encode_image(tr.target, x0.data());
    T* e = nb.eps.sample(i);
    for (std::size_t k = 0; k < x0.size(); ++k) e[k] = static_cast<T>(rng.normal());
    forward_noise<T>(x0, t, std::span<const T>(e, x0.size()), schedule, std::span<T>(in.x.sample(i), x0.size()));
    if (with_control) encode_control(tr.control.labels, num_classes, in.control->sample(i));
  }
  return nb;
}

template <typename T>
double noise_loss(const DiffusionModel<T>& model, const NoisedBatch<T>& batch) {
  const auto pred = model.predict_noise(batch.input);
  const auto& K = simd::active_kernels<T>();
  return K.sq_diff_sum(pred.size(), pred.data.data(), batch.eps.data.data()) / static_cast<double>(pred.size());
}

template <typename T>
double loss_and_gradients(const DiffusionModel<T>& model, const NoisedBatch<T>& batch, const GroupMask& trainable,
                          nn::Gradients<T>& grads, ForwardCache<T>& cache) {
  model.forward(batch.input, cache);
  const std::size_t count = cache.out.size();
  const auto& K = simd::active_kernels<T>();
  const double loss = K.sq_diff_sum(count, cache.out.data.data(), batch.eps.data.data()) / static_cast<double>(count);
  nn::Tensor<T> dout;
  dout.shape_as(cache.out.n, cache.out.c, cache.out.h, cache.out.w);
  const T scale = static_cast<T>(2.0 / static_cast<double>(count));
  K.axpby(count, scale, cache.out.data.data(), -scale, batch.eps.data.data(), dout.data.data());
  model.backward(batch.input, cache, dout, trainable, grads);
  return loss;
}

template <typename T>
Trainer<T>::Trainer(DiffusionModel<T>& model, NoiseSchedule schedule, TrainingConfig config, Phase phase)
    : model_(model),
      schedule_(std::move(schedule)),
      config_(config),
      phase_(phase),
      trainable_(phase == Phase::kBase ? base_pretrain_groups() : control_train_groups(config.sd_locked)),
      rng_(mix_seed(config.seed, phase == Phase::kBase ? 0xba5e : 0xc7e1)),
      grads_(model.params()) {
  config_.validate();
  for (const auto& p : model_.params()) {
    m_.emplace_back(p.value.size(), T(0));
    v_.emplace_back(p.value.size(), T(0));
  }
}

template <typename T>
double Trainer<T>::step(const std::vector<const DatasetTriple*>& batch) {
  const auto nb = make_noised_batch<T>(batch, schedule_, rng_, phase_ == Phase::kControl, model_.arch().num_classes);
  grads_.zero();
  const double loss = loss_and_gradients(model_, nb, trainable_, grads_, cache_);
  ++steps_;
  const simd::AdamWStep<T> st{static_cast<T>(config_.learning_rate),
                              static_cast<T>(config_.beta1),
                              static_cast<T>(config_.beta2),
                              static_cast<T>(config_.adam_eps),
                              static_cast<T>(config_.weight_decay),
                              static_cast<T>(1.0 - std::pow(config_.beta1, steps_)),
                              static_cast<T>(1.0 - std::pow(config_.beta2, steps_))};
  const auto& K = simd::active_kernels<T>();
  auto& params = model_.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!has(trainable_, params[i].group)) continue;
    K.adamw(params[i].value.size(), params[i].value.data(), grads_.g[i].data(), m_[i].data(), v_[i].data(), st);
  }
  return loss;
}

template NoisedBatch<float> make_noised_batch<float>(const std::vector<const DatasetTriple*>&, const NoiseSchedule&,
                                                     Rng&, bool, int);
template NoisedBatch<double> make_noised_batch<double>(const std::vector<const DatasetTriple*>&,
                                                       const NoiseSchedule&, Rng&, bool, int);
template double noise_loss<float>(const DiffusionModel<float>&, const NoisedBatch<float>&);
template double noise_loss<double>(const DiffusionModel<double>&, const NoisedBatch<double>&);
template double loss_and_gradients<float>(const DiffusionModel<float>&, const NoisedBatch<float>&, const GroupMask&,
                                          nn::Gradients<float>&, ForwardCache<float>&);
template double loss_and_gradients<double>(const DiffusionModel<double>&, const NoisedBatch<double>&,
                                           const GroupMask&, nn::Gradients<double>&, ForwardCache<double>&);
template class Trainer<float>;
template class Trainer<double>;

}  // namespace mapgen::diffusion
