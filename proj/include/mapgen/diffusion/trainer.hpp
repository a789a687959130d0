#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "mapgen/diffusion/model.hpp"
#include "mapgen/diffusion/schedule.hpp"
#include "mapgen/rng.hpp"
#include "mapgen/tiler.hpp"

namespace mapgen::diffusion {

/// (1) base pretraining without control, (2) control training against the locked base.
enum class Phase { kBase, kControl };

struct TrainingConfig {
  double learning_rate = 1e-4;  // full-scale runs used 2e-6 on a pretrained backbone
  int batch_size = 16;
  int max_steps = 1000;
  int log_every = 250;
  bool sd_locked = true;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  /// Throws ConfigError on non-positive learning rate, batch size or log interval.
  void validate() const;
};

nlohmann::json config_to_json(const TrainingConfig& c);
TrainingConfig config_from_json(const nlohmann::json& j);

/// A forward-noised batch with its noise target; fully determines the loss.
template <typename T>
struct NoisedBatch {
  ModelInput<T> input;
  nn::Tensor<T> eps;
};

/// Draws t uniformly from [1, T] and unit Gaussian noise per pixel. Throws DataError on an
/// empty batch or mixed tile sizes.
template <typename T>
NoisedBatch<T> make_noised_batch(const std::vector<const DatasetTriple*>& batch, const NoiseSchedule& schedule,
                                 Rng& rng, bool with_control, int num_classes);

/// Mean squared error between eps and the predicted noise.
template <typename T>
double noise_loss(const DiffusionModel<T>& model, const NoisedBatch<T>& batch);

/// Loss plus gradients (accumulated into grads) for the trainable groups.
template <typename T>
double loss_and_gradients(const DiffusionModel<T>& model, const NoisedBatch<T>& batch, const GroupMask& trainable,
                          nn::Gradients<T>& grads, ForwardCache<T>& cache);

/// Owns the optimizer state for one training session over a model it mutates exclusively.
template <typename T>
class Trainer {
 public:
  Trainer(DiffusionModel<T>& model, NoiseSchedule schedule, TrainingConfig config, Phase phase);

  /// One AdamW step on a freshly noised batch; returns the pre-update loss.
  double step(const std::vector<const DatasetTriple*>& batch);

  int steps_done() const { return steps_; }
  const DiffusionModel<T>& model() const { return model_; }
  const GroupMask& trainable() const { return trainable_; }
  Phase phase() const { return phase_; }
  const TrainingConfig& config() const { return config_; }
  const NoiseSchedule& schedule() const { return schedule_; }

 private:
  DiffusionModel<T>& model_;
  NoiseSchedule schedule_;
  TrainingConfig config_;
  Phase phase_;
  GroupMask trainable_;
  Rng rng_;
  nn::Gradients<T> grads_;
  std::vector<std::vector<T>> m_, v_;
  ForwardCache<T> cache_;
  int steps_ = 0;
};

}  // namespace mapgen::diffusion
