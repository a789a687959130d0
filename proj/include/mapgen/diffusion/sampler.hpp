#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mapgen/control_raster.hpp"
#include "mapgen/diffusion/model.hpp"
#include "mapgen/diffusion/schedule.hpp"

namespace mapgen::diffusion {

inline constexpr int kDefaultSampleSteps = 50;

/// One tile to sample. Without a control the base model runs unconditioned.
struct SampleRequest {
  const ControlImage* control = nullptr;
  StyleId style = StyleId::kModern;
  std::uint64_t seed = 0;
};

/// Descending step indices from T to 1, `steps` of them spread evenly (all T when steps >= T).
std::vector<int> sampling_timesteps(int T, int steps);

/// Ancestral sampling. Each request draws its initial and per-step noise from its own seeded
/// stream, so a tile depends only on (model, control, style, seed, steps), never on the batch.
template <typename T>
std::vector<RgbImage> sample_batch(const DiffusionModel<T>& model, const NoiseSchedule& schedule,
                                   std::span<const SampleRequest> requests, int steps, int width, int height);

template <typename T>
RgbImage sample(const DiffusionModel<T>& model, const ControlImage* control, StyleId style, std::uint64_t seed,
                const NoiseSchedule& schedule, int steps, int width, int height);

template <typename T>
RgbImage sample(const DiffusionModel<T>& model, const ControlImage& control, StyleId style, std::uint64_t seed,
                const NoiseSchedule& schedule, int steps = kDefaultSampleSteps) {
  return sample(model, &control, style, seed, schedule, steps, control.width(), control.height());
}

}  // namespace mapgen::diffusion
