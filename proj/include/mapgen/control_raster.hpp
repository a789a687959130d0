#pragma once

#include <span>
#include <string>
#include <vector>

#include "mapgen/classes.hpp"
#include "mapgen/image.hpp"
#include "mapgen/png_io.hpp"
#include "mapgen/scene.hpp"

namespace mapgen {

/// Per-pixel class labels plus the legend they were drawn under.
struct ControlImage {
  LabelImage labels;
  std::vector<ClassId> legend;  // sorted ascending, always contains Background

  int width() const { return labels.width(); }
  int height() const { return labels.height(); }
  friend bool operator==(const ControlImage&, const ControlImage&) = default;
};

/// Legend holding every class in the global table.
std::vector<ClassId> full_legend();

/// Rasterizes `scene` on a width x height canvas. Features whose class is not in `legend`
/// are skipped; overlaps resolve by z_priority.
ControlImage rasterize(const VectorScene& scene, std::span<const ClassId> legend, int width, int height);

/// Colors each pixel with its class's control color.
RgbImage control_to_rgb(const ControlImage& control);

struct UnknownColor {
  Rgb color;
  std::size_t pixels;
};

/// Raised when a raster holds colors outside the legend's control colors.
class UnknownColorError : public DataError {
 public:
  explicit UnknownColorError(std::vector<UnknownColor> colors);
  const std::vector<UnknownColor>& colors() const { return colors_; }

 private:
  std::vector<UnknownColor> colors_;
};

ControlImage rgb_to_control(const RgbImage& raster, std::span<const ClassId> legend);

/// Indexed PNG: palette index = class id, palette entry = control color.
png::Bytes encode_control_png(const ControlImage& control);
/// Accepts indexed PNGs written by encode_control_png or any RGB PNG using exact control colors.
ControlImage decode_control_png(std::span<const std::uint8_t> bytes, std::span<const ClassId> legend);

/// Label histogram indexed by class id.
std::vector<std::size_t> label_histogram(const LabelImage& labels);

}  // namespace mapgen
