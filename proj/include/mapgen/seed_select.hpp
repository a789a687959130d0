#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mapgen/control_raster.hpp"
#include "mapgen/diffusion/model.hpp"
#include "mapgen/diffusion/sampler.hpp"
#include "mapgen/diffusion/schedule.hpp"
#include "mapgen/image.hpp"
#include "mapgen/styles.hpp"

namespace mapgen::seed {

inline constexpr int kDefaultMaxDistance = 32;

/// Nearest nominal color by channel-sum distance among the style's classes whose every
/// channel lies within `max_distance`; Background when no class qualifies.
LabelImage segment_palette(const RgbImage& tile, const StyleSpec& style, int max_distance = kDefaultMaxDistance);

/// Maps a generated tile to class labels. Implementations must be thread-safe.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual std::string name() const = 0;
  virtual LabelImage segment(const RgbImage& tile, const StyleSpec& style) const = 0;
};

class PaletteSegmenter final : public Segmenter {
 public:
  explicit PaletteSegmenter(int max_distance = kDefaultMaxDistance) : max_distance_(max_distance) {}
  std::string name() const override { return "palette"; }
  LabelImage segment(const RgbImage& tile, const StyleSpec& style) const override {
    return segment_palette(tile, style, max_distance_);
  }

 private:
  int max_distance_;
};

/// Builds a segmenter by identifier ("palette" or "palette:<max_distance>"); ConfigError otherwise.
std::unique_ptr<Segmenter> make_segmenter(const std::string& id);

struct BackgroundStd {
  double value = 0.0;
  bool degenerate = false;  // fewer than two Background pixels; value is 0
};

/// Population standard deviation per channel over Background-labeled pixels, averaged over
/// the three channels.
BackgroundStd std_background(const RgbImage& tile, const ControlImage& control);

/// Classes scored for a control: the style legend intersected with the classes present.
std::vector<ClassId> evaluation_classes(const ControlImage& control, const StyleSpec& style);

/// mIoU of a segmentation against the control over evaluation_classes().
double control_miou(const LabelImage& segmentation, const ControlImage& control, const StyleSpec& style);

struct SeedCandidate {
  std::uint64_t seed = 0;
  RgbImage tile;
  LabelImage segmentation;
  double miou = 0.0;
  double std_background = 0.0;
  bool degenerate_background = false;
  double score = 0.0;
};

struct SeedSelectConfig {
  int k = 6;
  double lambda = 1.0;
  std::uint64_t run_seed = 0;
  std::string segmenter = "palette";

  /// Throws ConfigError unless k >= 1 and lambda >= 0.
  void validate() const;
};

/// score = miou - lambda * std_background / 128
double combined_score(double miou, double std_background, double lambda);

/// Seeds seed_0..seed_{k-1} derived from the run seed.
std::vector<std::uint64_t> candidate_seeds(std::uint64_t run_seed, int k);

SeedCandidate score_candidate(std::uint64_t seed, RgbImage tile, const ControlImage& control, const StyleSpec& style,
                              const Segmenter& segmenter, double lambda);

/// Index of the highest score; ties go to the lowest seed value, independent of order.
std::size_t best_candidate(std::span<const SeedCandidate> candidates);

struct Selection {
  SeedCandidate best;
  std::vector<SeedCandidate> candidates;  // in seed-derivation order
};

/// Produces one tile per seed; the diffusion sampler in production, a fixture in tests.
using CandidateGenerator = std::function<std::vector<RgbImage>(std::span<const std::uint64_t> seeds)>;

Selection select_seed(const ControlImage& control, const StyleSpec& style, const SeedSelectConfig& config,
                      const CandidateGenerator& generate);

/// Candidates sampled from `model` at the control's size.
CandidateGenerator sampler_generator(const diffusion::DiffusionModel<float>& model, const diffusion::NoiseSchedule& schedule,
                                     const ControlImage& control, StyleId style,
                                     int steps = diffusion::kDefaultSampleSteps);

inline Selection select_seed(const diffusion::DiffusionModel<float>& model, const ControlImage& control,
                             const StyleSpec& style, const SeedSelectConfig& config,
                             const diffusion::NoiseSchedule& schedule, int steps = diffusion::kDefaultSampleSteps) {
  return select_seed(control, style, config, sampler_generator(model, schedule, control, style.id, steps));
}

/// One JSON line per candidate: {seed, miou, std_background, score, chosen}.
void write_selection_report(std::ostream& out, const Selection& selection);

}  // namespace mapgen::seed
