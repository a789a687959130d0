#include "mapgen/control_raster.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>

#include "mapgen/raster.hpp"

namespace mapgen {

namespace {

std::string format_unknown(const std::vector<UnknownColor>& colors) {
  std::string msg = std::to_string(colors.size()) + " unknown control color(s):";
  for (const auto& c : colors) {
    msg += " rgb(" + std::to_string(c.color.r) + "," + std::to_string(c.color.g) + "," + std::to_string(c.color.b) +
           ")x" + std::to_string(c.pixels);
  }
  return msg;
}

std::vector<ClassId> normalized_legend(std::span<const ClassId> legend) {
  std::vector<ClassId> out(legend.begin(), legend.end());
  for (ClassId c : out) {
    if (c >= kNumClasses) throw DataError("legend: unknown class id " + std::to_string(c));
  }
  out.push_back(kBackgroundId);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::uint32_t pack(Rgb c) { return (std::uint32_t{c.r} << 16) | (std::uint32_t{c.g} << 8) | c.b; }

}  // namespace

std::vector<ClassId> full_legend() {
  std::vector<ClassId> out(kNumClasses);
  std::iota(out.begin(), out.end(), ClassId{0});
  return out;
}

ControlImage rasterize(const VectorScene& scene, std::span<const ClassId> legend, int width, int height) {
  if (width != scene.width || height != scene.height) {
    throw DataError("rasterize: canvas " + std::to_string(width) + "x" + std::to_string(height) +
                    " does not match scene extent " + std::to_string(scene.width) + "x" + std::to_string(scene.height));
  }
  for (const Feature& f : scene.features) {
    if (f.class_id >= kNumClasses) throw DataError("rasterize: feature class " + std::to_string(f.class_id) + " not in class table");
  }
  ControlImage out{LabelImage(width, height, kBackgroundId), normalized_legend(legend)};
  std::array<bool, kNumClasses> allowed{};
  for (ClassId c : out.legend) allowed[c] = true;

  std::vector<const Feature*> order;
  for (const Feature& f : scene.features) {
    if (allowed[f.class_id] && f.class_id != kBackgroundId) order.push_back(&f);
  }
  std::stable_sort(order.begin(), order.end(), [](const Feature* a, const Feature* b) {
    return feature_class(a->class_id).z_priority < feature_class(b->class_id).z_priority;
  });
  for (const Feature* f : order) {
    const ClassId cls = f->class_id;
    raster::draw_feature(*f, [&](int x, int y) {
      if (out.labels.contains(x, y)) out.labels.at(x, y) = cls;
    });
  }
  return out;
}

RgbImage control_to_rgb(const ControlImage& control) {
  RgbImage out(control.width(), control.height());
  auto src = control.labels.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = feature_class(src[i]).control_color;
  return out;
}

UnknownColorError::UnknownColorError(std::vector<UnknownColor> colors)
    : DataError(format_unknown(colors)), colors_(std::move(colors)) {}

ControlImage rgb_to_control(const RgbImage& raster, std::span<const ClassId> legend) {
  ControlImage out{LabelImage(raster.width(), raster.height()), normalized_legend(legend)};
  std::map<std::uint32_t, ClassId> lookup;
  for (ClassId c : out.legend) lookup[pack(feature_class(c).control_color)] = c;
  std::map<std::uint32_t, std::size_t> unknown;
  auto src = raster.pixels();
  auto dst = out.labels.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto key = pack(src[i]);
    auto it = lookup.find(key);
    if (it == lookup.end()) {
      ++unknown[key];
    } else {
      dst[i] = it->second;
    }
  }
  if (!unknown.empty()) {
    std::vector<UnknownColor> colors;
    for (auto [key, n] : unknown) {
      colors.push_back({Rgb{static_cast<std::uint8_t>(key >> 16), static_cast<std::uint8_t>(key >> 8), static_cast<std::uint8_t>(key)}, n});
    }
    throw UnknownColorError(std::move(colors));
  }
  return out;
}

png::Bytes encode_control_png(const ControlImage& control) {
  std::vector<Rgb> palette;
  for (const auto& c : class_table()) palette.push_back(c.control_color);
  return png::encode_indexed(control.labels, palette);
}

ControlImage decode_control_png(std::span<const std::uint8_t> bytes, std::span<const ClassId> legend) {
  // Palette PNGs go through their colors as well, so an index/palette pair that disagrees
  // with the class table is reported the same way as a bad RGB upload.
  return rgb_to_control(png::decode_rgb(bytes), legend);
}

std::vector<std::size_t> label_histogram(const LabelImage& labels) {
  std::vector<std::size_t> hist(256, 0);
  for (ClassId v : labels.pixels()) ++hist[v];
  hist.resize(kNumClasses);
  return hist;
}

}  // namespace mapgen
