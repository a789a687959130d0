#pragma once

#include <array>
#include <cstdint>

#include "mapgen/classes.hpp"
#include "mapgen/image.hpp"
#include "mapgen/scene.hpp"
#include "mapgen/styles.hpp"

namespace mapgen {

inline constexpr int kDefaultTileSize = 64;

/// Feature counts per class plus the number of text-label boxes. For the coordinate grid
/// the count is the number of grid lines per axis.
struct Density {
  std::array<int, kNumClasses> counts{};
  int text_boxes = 0;

  int& operator[](Cls c) { return counts[id(c)]; }
  int operator[](Cls c) const { return counts[id(c)]; }
};

/// Counts tuned for a 256 x 256 extent, scaled by area.
Density default_density(int width, int height);
/// All zeros.
Density empty_density();

/// Deterministic procedural scene. Throws ConfigError when the extent is not a positive
/// multiple of `tile_size` or a count is negative.
VectorScene generate_toy_world(std::uint64_t seed, int width, int height, const Density& density,
                               int tile_size = kDefaultTileSize);

/// Reference rendering of `scene` in `style`: palette colors over the style background,
/// dark glyph blocks in text boxes, then uniform per-channel jitter of +-render_noise seeded
/// from the scene content. Classes outside the legend are skipped.
RgbImage render_reference(const VectorScene& scene, const StyleSpec& style);

/// Same, with an explicit noise amplitude override.
RgbImage render_reference(const VectorScene& scene, const StyleSpec& style, int render_noise);

}  // namespace mapgen
