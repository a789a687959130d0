#include "mapgen/postproc.hpp"

#include <algorithm>
#include <unordered_map>

#include "mapgen/errors.hpp"
#include "mapgen/raster.hpp"

namespace mapgen::postproc {

namespace {

std::uint32_t pack(Rgb c) { return (std::uint32_t{c.r} << 16) | (std::uint32_t{c.g} << 8) | c.b; }
Rgb unpack(std::uint32_t v) {
  return Rgb{static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

nlohmann::json rgb_json(Rgb c) { return nlohmann::json::array({c.r, c.g, c.b}); }
Rgb rgb_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<int>>();
  if (v.size() != 3) throw ConfigError("color must have three channels");
  for (int x : v)
    if (x < 0 || x > 255) throw ConfigError("color channel outside 0..255");
  return Rgb{static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]), static_cast<std::uint8_t>(v[2])};
}

}  // namespace

PostprocPlan default_plan(const StyleSpec& style) {
  PostprocPlan p;
  p.style = style.id;
  if (style.render_noise == 0) {
    for (ClassId c : style.correctable_classes) p.corrections.push_back({c, style.color(c), kDefaultCorrectionTolerance});
  } else {
    p.homogenize_background = style.background();
    if (!style.in_legend(id(Cls::kContourLine))) p.contour_overlay = ContourOverlay{};
  }
  return p;
}

void validate_plan(const PostprocPlan& plan, const StyleSpec& style) {
  for (const auto& c : plan.corrections) {
    if (c.tolerance < 0) throw ConfigError("correction tolerance must be >= 0");
    if (!style.in_legend(c.class_id))
      throw ConfigError("correction class " + std::to_string(c.class_id) + " not in the " + style.key + " legend");
  }
  if (plan.contour_overlay && plan.contour_overlay->width < 1) throw ConfigError("contour width must be >= 1");
}

nlohmann::json plan_to_json(const PostprocPlan& plan) {
  nlohmann::json j;
  j["style"] = style(plan.style).key;
  j["corrections"] = nlohmann::json::array();
  for (const auto& c : plan.corrections)
    j["corrections"].push_back(
        {{"class", feature_class(c.class_id).key}, {"nominal", rgb_json(c.nominal)}, {"tolerance", c.tolerance}});
  j["homogenize_background"] = plan.homogenize_background ? rgb_json(*plan.homogenize_background) : nlohmann::json();
  if (plan.contour_overlay)
    j["contour_overlay"] = {{"stroke", rgb_json(plan.contour_overlay->stroke)}, {"width", plan.contour_overlay->width}};
  else
    j["contour_overlay"] = nullptr;
  return j;
}

PostprocPlan plan_from_json(const nlohmann::json& j) {
  try {
    PostprocPlan p;
    const auto* s = find_style(j.at("style").get<std::string>());
    if (!s) throw ConfigError("unknown style in post-processing plan");
    p.style = s->id;
    for (const auto& c : j.value("corrections", nlohmann::json::array())) {
      const auto cls = class_by_key(c.at("class").get<std::string>());
      if (!cls) throw ConfigError("unknown class in post-processing plan");
      p.corrections.push_back({*cls, rgb_from(c.at("nominal")), c.value("tolerance", kDefaultCorrectionTolerance)});
    }
    if (j.contains("homogenize_background") && !j["homogenize_background"].is_null())
      p.homogenize_background = rgb_from(j["homogenize_background"]);
    if (j.contains("contour_overlay") && !j["contour_overlay"].is_null()) {
      const auto& o = j["contour_overlay"];
      p.contour_overlay = ContourOverlay{rgb_from(o.value("stroke", rgb_json(kContourBrown))), o.value("width", 1)};
    }
    validate_plan(p, *s);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad post-processing plan: ") + e.what());
  }
}

RgbImage correct_colors(const RgbImage& tile, const ControlImage& control, const PostprocPlan& plan) {
  require_same_shape(tile, control.labels, "correct_colors");
  RgbImage out = tile;
  auto px = out.pixels();
  const auto lab = control.labels.pixels();
  for (const auto& corr : plan.corrections) {
    std::unordered_map<std::uint32_t, std::size_t> counts;
    for (std::size_t i = 0; i < px.size(); ++i)
      if (lab[i] == corr.class_id) ++counts[pack(px[i])];
    if (counts.empty()) continue;
    // modal color; ties prefer the nominal color, then the lowest packed value
    const std::uint32_t nominal = pack(corr.nominal);
    std::uint32_t mode = 0;
    std::size_t best = 0;
    for (const auto& [color, n] : counts) {
      const bool better = n > best || (n == best && (color == nominal || (mode != nominal && color < mode)));
      if (better) {
        mode = color;
        best = n;
      }
    }
    const Rgb modal = unpack(mode);
    for (std::size_t i = 0; i < px.size(); ++i) {
      if (lab[i] != corr.class_id) continue;
      if (channel_max_distance(px[i], modal) <= corr.tolerance ||
          channel_max_distance(px[i], corr.nominal) <= corr.tolerance)
        px[i] = corr.nominal;
    }
  }
  return out;
}

RgbImage homogenize_background(const RgbImage& tile, const ControlImage& control, Rgb target) {
  require_same_shape(tile, control.labels, "homogenize_background");
  RgbImage out = tile;
  auto px = out.pixels();
  const auto lab = control.labels.pixels();
  for (std::size_t i = 0; i < px.size(); ++i)
    if (lab[i] == kBackgroundId) px[i] = target;
  return out;
}

RgbImage overlay_contours(const RgbImage& tile, std::span<const std::vector<Point>> polylines, Rgb stroke, int width) {
  if (width < 1) throw ConfigError("contour width must be >= 1");
  RgbImage out = tile;
  auto plot = [&](int x, int y) {
    if (out.contains(x, y)) out.at(x, y) = stroke;
  };
  for (const auto& line : polylines) raster::stamp_polyline(std::span<const Point>(line), width, plot);
  return out;
}

RgbImage apply_plan(const RgbImage& tile, const ControlImage& control, const PostprocPlan& plan,
                    std::span<const std::vector<Point>> contours) {
  RgbImage out = correct_colors(tile, control, plan);
  if (plan.homogenize_background) out = homogenize_background(out, control, *plan.homogenize_background);
  if (plan.contour_overlay && !contours.empty())
    out = overlay_contours(out, contours, plan.contour_overlay->stroke, plan.contour_overlay->width);
  return out;
}

std::vector<std::vector<Point>> contour_polylines(const VectorScene& scene) {
  std::vector<std::vector<Point>> out;
  for (const auto& f : scene.features)
    if (f.class_id == id(Cls::kContourLine) && f.geometry == Geometry::kPolyline) out.push_back(f.points);
  return out;
}

}  // namespace mapgen::postproc
