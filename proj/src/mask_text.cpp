#include "mapgen/mask_text.hpp"

#include <algorithm>

namespace mapgen {

BinaryMask build_text_mask(std::span<const Box> boxes, int width, int height, int dilation) {
  if (dilation < 0) throw ConfigError("mask dilation must be >= 0");
  BinaryMask mask(width, height, 0);
  for (const Box& b : boxes) {
    const int x0 = std::max(0, b.x - dilation);
    const int y0 = std::max(0, b.y - dilation);
    const int x1 = std::min(width, b.x + b.w + dilation);
    const int y1 = std::min(height, b.y + b.h + dilation);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) mask.at(x, y) = 1;
  }
  return mask;
}

namespace {

template <typename Pixel>
Grid<Pixel> masked(const Grid<Pixel>& image, const BinaryMask& mask, Pixel fill) {
  require_same_shape(image, mask, "apply_mask");
  Grid<Pixel> out = image;
  auto dst = out.pixels();
  auto m = mask.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (m[i]) dst[i] = fill;
  }
  return out;
}

}  // namespace

RgbImage apply_mask(const RgbImage& image, const BinaryMask& mask, Rgb fill) { return masked(image, mask, fill); }

ControlImage apply_mask(const ControlImage& control, const BinaryMask& mask, ClassId fill) {
  if (fill != kBackgroundId) throw DataError("apply_mask: control images may only be blanked with Background");
  return ControlImage{masked(control.labels, mask, fill), control.legend};
}

std::size_t mask_count(const BinaryMask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.pixels().begin(), mask.pixels().end(), [](auto v) { return v != 0; }));
}

}  // namespace mapgen
