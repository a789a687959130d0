#pragma once

#include <span>

#include "mapgen/control_raster.hpp"
#include "mapgen/image.hpp"
#include "mapgen/scene.hpp"

namespace mapgen {

inline constexpr int kDefaultMaskDilation = 1;

/// true where a pixel lies inside some box grown by `dilation` on every side (clamped).
BinaryMask build_text_mask(std::span<const Box> boxes, int width, int height, int dilation = kDefaultMaskDilation);

RgbImage apply_mask(const RgbImage& image, const BinaryMask& mask, Rgb fill);
/// `fill` must be Background: a blanked control region must look like "no feature".
ControlImage apply_mask(const ControlImage& control, const BinaryMask& mask, ClassId fill = kBackgroundId);

std::size_t mask_count(const BinaryMask& mask);

}  // namespace mapgen
