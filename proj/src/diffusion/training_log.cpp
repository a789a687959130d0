#include "mapgen/diffusion/training_log.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <numeric>

#include <nlohmann/json.hpp>

#include "mapgen/errors.hpp"
#include "mapgen/png_io.hpp"
#include "mapgen/seed_select.hpp"

namespace mapgen::diffusion {

std::filesystem::path training_log_path(const std::filesystem::path& dir, int step) {
  char name[64];
  std::snprintf(name, sizeof name, "log_step%06d.png", step);
  return dir / name;
}

double mean_control_miou(const std::vector<RgbImage>& tiles, const std::vector<DatasetTriple>& triples) {
  if (tiles.size() != triples.size() || tiles.empty()) throw DataError("tiles and triples must pair up");
  double sum = 0.0;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const StyleSpec& st = style(triples[i].style);
    sum += seed::control_miou(seed::segment_palette(tiles[i], st), triples[i].control, st);
  }
  return sum / static_cast<double>(tiles.size());
}

template <typename T>
LogResult emit_training_log(const DiffusionModel<T>& model, const NoiseSchedule& schedule,
                            const std::vector<DatasetTriple>& log_triples, int step, int log_every,
                            const std::filesystem::path& dir, bool use_control, int sample_steps, std::uint64_t seed) {
  if (log_every < 1 || step % log_every != 0)
    throw ConfigError("training log at step " + std::to_string(step) + " is not a multiple of log_every");
  if (log_triples.empty()) throw DataError("no log triples");
  const int w = log_triples.front().target.width();
  const int h = log_triples.front().target.height();
  std::vector<SampleRequest> reqs;
  for (std::size_t i = 0; i < log_triples.size(); ++i)
    reqs.push_back({use_control ? &log_triples[i].control : nullptr, log_triples[i].style, mix_seed(seed, i)});
  LogResult res;
  res.samples = sample_batch(model, schedule, reqs, sample_steps, w, h);
  res.miou = mean_control_miou(res.samples, log_triples);

  constexpr int gap = 2;
  const int rows = static_cast<int>(log_triples.size());
  RgbImage grid(3 * w + 4 * gap, rows * h + (rows + 1) * gap, Rgb{255, 255, 255});
  auto blit = [&](const RgbImage& img, int ox, int oy) {
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) grid.at(ox + x, oy + y) = img.at(x, y);
  };
  for (int r = 0; r < rows; ++r) {
    const int oy = gap + r * (h + gap);
    blit(res.samples[r], gap, oy);
    blit(log_triples[r].target, 2 * gap + w, oy);
    blit(control_to_rgb(log_triples[r].control), 3 * gap + 2 * w, oy);
  }
  res.image = training_log_path(dir, step);
  png::write_rgb(res.image, grid);
  return res;
}

template <typename T>
TrainSummary train_loop(Trainer<T>& trainer, const std::vector<DatasetTriple>& data, const TrainLoopOptions& options) {
  if (data.empty()) throw DataError("no training data");
  TrainSummary summary;
  Rng order_rng(mix_seed(trainer.config().seed, 0x0bd3));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  std::deque<double> window;
  double window_sum = 0.0;
  const int bs = trainer.config().batch_size;

  auto log = [&](int step, double loss) {
    double val = -1.0;
    if (options.log_every > 0 && !options.log_triples.empty() && step % options.log_every == 0) {
      const auto res = emit_training_log(trainer.model(), trainer.schedule(), options.log_triples, step,
                                         options.log_every, options.log_dir, true, options.sample_steps,
                                         trainer.config().seed);
      val = res.miou;
      summary.log_miou.emplace_back(step, val);
    }
    if (options.metrics && val >= 0.0) {
      nlohmann::json j = {{"step", step}, {"loss", loss}, {"val_miou", val}};
      *options.metrics << j.dump() << "\n";
      options.metrics->flush();
    }
  };

  if (options.log_at_start) log(options.step_offset + trainer.steps_done(), 0.0);
  std::vector<const DatasetTriple*> batch;
  for (int s = 0; s < options.steps; ++s) {
    batch.clear();
    for (int b = 0; b < bs; ++b) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size(); i > 1; --i)
          std::swap(order[i - 1], order[static_cast<std::size_t>(order_rng.uniform_int(0, i - 1))]);
        cursor = 0;
      }
      batch.push_back(&data[order[cursor++]]);
    }
    const double loss = trainer.step(batch);
    window.push_back(loss);
    window_sum += loss;
    if (static_cast<int>(window.size()) > std::max(1, options.loss_window)) {
      window_sum -= window.front();
      window.pop_front();
    }
    const double avg = window_sum / window.size();
    summary.final_loss = avg;
    if (options.progress) options.progress(options.step_offset + trainer.steps_done(), avg);
    log(options.step_offset + trainer.steps_done(), avg);
  }
  return summary;
}

template LogResult emit_training_log<float>(const DiffusionModel<float>&, const NoiseSchedule&,
                                            const std::vector<DatasetTriple>&, int, int, const std::filesystem::path&,
                                            bool, int, std::uint64_t);
template LogResult emit_training_log<double>(const DiffusionModel<double>&, const NoiseSchedule&,
                                             const std::vector<DatasetTriple>&, int, int,
                                             const std::filesystem::path&, bool, int, std::uint64_t);
template TrainSummary train_loop<float>(Trainer<float>&, const std::vector<DatasetTriple>&, const TrainLoopOptions&);
template TrainSummary train_loop<double>(Trainer<double>&, const std::vector<DatasetTriple>&,
                                         const TrainLoopOptions&);

}  // namespace mapgen::diffusion
