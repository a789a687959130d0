#include "mapgen/seed_select.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <nlohmann/json.hpp>

#include "mapgen/errors.hpp"
#include "mapgen/fidelity_metrics.hpp"
#include "mapgen/rng.hpp"

namespace mapgen::seed {

LabelImage segment_palette(const RgbImage& tile, const StyleSpec& style, int max_distance) {
  LabelImage out(tile.width(), tile.height(), kBackgroundId);
  std::vector<std::pair<ClassId, Rgb>> entries;
  for (ClassId c : style.legend) entries.emplace_back(c, style.color(c));
  if (entries.empty()) throw ConfigError("style " + style.key + " has an empty palette");
  const auto src = tile.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    int best = -1;
    int best_d = 0;
    for (std::size_t e = 0; e < entries.size(); ++e) {
      if (channel_max_distance(src[i], entries[e].second) > max_distance) continue;
      const int d = channel_sum_distance(src[i], entries[e].second);
      if (best < 0 || d < best_d) {
        best = static_cast<int>(e);
        best_d = d;
      }
    }
    dst[i] = best < 0 ? kBackgroundId : entries[best].first;
  }
  return out;
}

std::unique_ptr<Segmenter> make_segmenter(const std::string& id) {
  if (id == "palette") return std::make_unique<PaletteSegmenter>();
  if (id.rfind("palette:", 0) == 0) {
    try {
      const int d = std::stoi(id.substr(8));
      if (d >= 0) return std::make_unique<PaletteSegmenter>(d);
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("unknown segmenter '" + id + "'");
}

BackgroundStd std_background(const RgbImage& tile, const ControlImage& control) {
  require_same_shape(tile, control.labels, "std_background");
  const auto px = tile.pixels();
  const auto lab = control.labels.pixels();
  auto channel = [](Rgb p, int c) { return static_cast<double>(c == 0 ? p.r : c == 1 ? p.g : p.b); };
  std::array<double, 3> mean{};
  std::size_t n = 0;
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (lab[i] != kBackgroundId) continue;
    for (int c = 0; c < 3; ++c) mean[c] += channel(px[i], c);
    ++n;
  }
  if (n < 2) return {0.0, true};
  for (auto& m : mean) m /= static_cast<double>(n);
  std::array<double, 3> var{};
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (lab[i] != kBackgroundId) continue;
    for (int c = 0; c < 3; ++c) {
      const double d = channel(px[i], c) - mean[c];
      var[c] += d * d;
    }
  }
  double acc = 0.0;
  for (int c = 0; c < 3; ++c) acc += std::sqrt(var[c] / static_cast<double>(n));
  return {acc / 3.0, false};
}

std::vector<ClassId> evaluation_classes(const ControlImage& control, const StyleSpec& style) {
  std::array<bool, 256> present{};
  for (ClassId c : control.labels.pixels()) present[c] = true;
  std::vector<ClassId> out;
  for (ClassId c : style.legend)
    if (present[c]) out.push_back(c);
  return out;
}

double control_miou(const LabelImage& segmentation, const ControlImage& control, const StyleSpec& style) {
  return metrics::miou(segmentation, control.labels, evaluation_classes(control, style));
}

void SeedSelectConfig::validate() const {
  if (k < 1) throw ConfigError("seed selection needs k >= 1");
  if (!(lambda >= 0.0)) throw ConfigError("seed selection needs lambda >= 0");
}

double combined_score(double miou, double std_background, double lambda) {
  return miou - lambda * (std_background / 128.0);
}

std::vector<std::uint64_t> candidate_seeds(std::uint64_t run_seed, int k) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < k; ++i) seeds.push_back(mix_seed(run_seed, static_cast<std::uint64_t>(i)));
  return seeds;
}

SeedCandidate score_candidate(std::uint64_t seed, RgbImage tile, const ControlImage& control, const StyleSpec& style,
                              const Segmenter& segmenter, double lambda) {
  SeedCandidate c;
  c.seed = seed;
  c.segmentation = segmenter.segment(tile, style);
  c.miou = control_miou(c.segmentation, control, style);
  const auto sb = std_background(tile, control);
  c.std_background = sb.value;
  c.degenerate_background = sb.degenerate;
  c.score = combined_score(c.miou, c.std_background, lambda);
  c.tile = std::move(tile);
  return c;
}

std::size_t best_candidate(std::span<const SeedCandidate> candidates) {
  if (candidates.empty()) throw DataError("no seed candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const auto& a = candidates[i];
    const auto& b = candidates[best];
    if (a.score > b.score || (a.score == b.score && a.seed < b.seed)) best = i;
  }
  return best;
}

Selection select_seed(const ControlImage& control, const StyleSpec& style, const SeedSelectConfig& config,
                      const CandidateGenerator& generate) {
  config.validate();
  const auto segmenter = make_segmenter(config.segmenter);
  const auto seeds = candidate_seeds(config.run_seed, config.k);
  auto tiles = generate(seeds);
  if (tiles.size() != seeds.size()) throw DataError("candidate generator returned the wrong number of tiles");
  Selection sel;
  for (std::size_t i = 0; i < seeds.size(); ++i)
    sel.candidates.push_back(score_candidate(seeds[i], std::move(tiles[i]), control, style, *segmenter, config.lambda));
  sel.best = sel.candidates[best_candidate(sel.candidates)];
  return sel;
}

void write_selection_report(std::ostream& out, const Selection& selection) {
  for (const auto& c : selection.candidates) {
    nlohmann::json j = {{"seed", c.seed},
                        {"miou", c.miou},
                        {"std_background", c.std_background},
                        {"score", c.score},
                        {"chosen", c.seed == selection.best.seed}};
    out << j.dump() << "\n";
  }
}

CandidateGenerator sampler_generator(const diffusion::DiffusionModel<float>& model, const diffusion::NoiseSchedule& schedule,
                                     const ControlImage& control, StyleId style, int steps) {
  return [&model, &schedule, &control, style, steps](std::span<const std::uint64_t> seeds) {
    std::vector<diffusion::SampleRequest> reqs;
    for (auto s : seeds) reqs.push_back({&control, style, s});
    return diffusion::sample_batch(model, schedule, std::span<const diffusion::SampleRequest>(reqs), steps,
                                   control.width(), control.height());
  };
}

}  // namespace mapgen::seed
