#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <vector>

#include "mapgen/diffusion/sampler.hpp"
#include "mapgen/diffusion/trainer.hpp"
#include "mapgen/tiler.hpp"

namespace mapgen::diffusion {

struct LogResult {
  std::filesystem::path image;
  double miou = 0.0;  // mean over the log triples of segment-vs-control mIoU
  std::vector<RgbImage> samples;
};

std::filesystem::path training_log_path(const std::filesystem::path& dir, int step);

/// Samples every log triple (seeded by `seed` and the row), writes a PNG grid with one
/// (sample | target | control) row per triple to training_log_path(dir, step), and scores
/// the samples with the palette segmenter. Throws ConfigError unless log_every divides step.
template <typename T>
LogResult emit_training_log(const DiffusionModel<T>& model, const NoiseSchedule& schedule,
                            const std::vector<DatasetTriple>& log_triples, int step, int log_every,
                            const std::filesystem::path& dir, bool use_control, int sample_steps = kDefaultSampleSteps,
                            std::uint64_t seed = 0);

/// Mean segment-vs-control mIoU of tiles against their triples' controls.
double mean_control_miou(const std::vector<RgbImage>& tiles, const std::vector<DatasetTriple>& triples);

struct TrainLoopOptions {
  int steps = 0;
  int log_every = 0;                  // 0 disables image logs
  std::filesystem::path log_dir;
  std::vector<DatasetTriple> log_triples;
  int sample_steps = kDefaultSampleSteps;
  std::ostream* metrics = nullptr;    // JSON lines {step, loss, val_miou}
  int loss_window = 50;               // loss reported as a running mean over this many steps
  int step_offset = 0;                // added to the trainer's count; keeps one step axis across phases
  bool log_at_start = true;
  std::function<void(int step, double loss)> progress;
};

struct TrainSummary {
  std::vector<std::pair<int, double>> log_miou;  // (step, val_miou) at every image log
  double final_loss = 0.0;
};

/// Runs `options.steps` trainer steps over shuffled mini-batches of `data`, logging before the
/// first step and at every multiple of log_every. Logs always sample with the control; during
/// base pretraining the zero couplings make that identical to unconditioned sampling.
template <typename T>
TrainSummary train_loop(Trainer<T>& trainer, const std::vector<DatasetTriple>& data, const TrainLoopOptions& options);

}  // namespace mapgen::diffusion
