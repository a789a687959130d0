#pragma once

#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "mapgen/control_raster.hpp"
#include "mapgen/image.hpp"
#include "mapgen/scene.hpp"
#include "mapgen/styles.hpp"

namespace mapgen::postproc {

inline constexpr Rgb kContourBrown{139, 69, 19};
inline constexpr int kDefaultCorrectionTolerance = 24;

struct ColorCorrection {
  ClassId class_id = 0;
  Rgb nominal;
  int tolerance = kDefaultCorrectionTolerance;  // per channel
};

struct ContourOverlay {
  Rgb stroke = kContourBrown;
  int width = 1;
};

struct PostprocPlan {
  StyleId style = StyleId::kModern;
  std::vector<ColorCorrection> corrections;
  std::optional<Rgb> homogenize_background;
  std::optional<ContourOverlay> contour_overlay;
};

/// Modern: correct background, river and building. Historical styles: homogenize the
/// background only, plus brown contour overlay for the style whose legend has no contour lines.
PostprocPlan default_plan(const StyleSpec& style);

/// Throws ConfigError for negative tolerances/widths or corrections outside the style legend.
void validate_plan(const PostprocPlan& plan, const StyleSpec& style);

nlohmann::json plan_to_json(const PostprocPlan& plan);
PostprocPlan plan_from_json(const nlohmann::json& j);

/// For each correction, pixels labeled with its class whose color lies within `tolerance`
/// (every channel) of the class's modal color in this tile, or of the nominal color, are set to
/// the nominal color. Other pixels are untouched.
RgbImage correct_colors(const RgbImage& tile, const ControlImage& control, const PostprocPlan& plan);

/// Every Background-labeled pixel set to `target`.
RgbImage homogenize_background(const RgbImage& tile, const ControlImage& control, Rgb target);

/// Contour polylines stamped on top with the control rasterizer's stamping rule.
RgbImage overlay_contours(const RgbImage& tile, std::span<const std::vector<Point>> polylines, Rgb stroke, int width);

/// Corrections, then homogenization, then the contour overlay.
RgbImage apply_plan(const RgbImage& tile, const ControlImage& control, const PostprocPlan& plan,
                    std::span<const std::vector<Point>> contours = {});

/// Contour-line polylines of a scene, for the overlay.
std::vector<std::vector<Point>> contour_polylines(const VectorScene& scene);

}  // namespace mapgen::postproc
