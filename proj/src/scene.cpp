#include "mapgen/scene.hpp"

#include <nlohmann/json.hpp>

#include "mapgen/classes.hpp"

namespace mapgen {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "mapgen.scene/1";

const char* geometry_name(Geometry g) {
  switch (g) {
    case Geometry::kPolygon: return "polygon";
    case Geometry::kPolyline: return "polyline";
    case Geometry::kPoint: return "point";
  }
  return "polyline";
}

Geometry geometry_from(const std::string& s) {
  if (s == "polygon") return Geometry::kPolygon;
  if (s == "polyline") return Geometry::kPolyline;
  if (s == "point") return Geometry::kPoint;
  throw DataError("scene: unknown geometry '" + s + "'");
}

}  // namespace

void validate_scene(const VectorScene& scene) {
  if (scene.width <= 0 || scene.height <= 0) throw DataError("scene: extent must be positive");
  auto inside = [&](Point p) { return p.x >= 0 && p.y >= 0 && p.x < scene.width && p.y < scene.height; };
  for (std::size_t i = 0; i < scene.features.size(); ++i) {
    const Feature& f = scene.features[i];
    if (f.class_id >= kNumClasses) throw DataError("scene: feature " + std::to_string(i) + " has unknown class id " + std::to_string(f.class_id));
    if (f.points.empty()) throw DataError("scene: feature " + std::to_string(i) + " has no points");
    for (Point p : f.points) {
      if (!inside(p)) throw DataError("scene: feature " + std::to_string(i) + " leaves the extent");
    }
    if (f.stroke_width < 1 || f.size < 1) throw DataError("scene: feature " + std::to_string(i) + " has non-positive width");
  }
  for (const Box& b : scene.text_boxes) {
    if (b.w <= 0 || b.h <= 0 || b.x < 0 || b.y < 0 || b.x + b.w > scene.width || b.y + b.h > scene.height) {
      throw DataError("scene: text box outside extent");
    }
  }
}

std::string scene_to_json(const VectorScene& scene) {
  json j;
  j["format"] = kFormat;
  j["width"] = scene.width;
  j["height"] = scene.height;
  json features = json::array();
  for (const Feature& f : scene.features) {
    json pts = json::array();
    for (Point p : f.points) pts.push_back({p.x, p.y});
    features.push_back({{"geometry", geometry_name(f.geometry)},
                        {"class", std::string(feature_class(f.class_id).key)},
                        {"points", std::move(pts)},
                        {"stroke_width", f.stroke_width},
                        {"size", f.size}});
  }
  j["features"] = std::move(features);
  json boxes = json::array();
  for (const Box& b : scene.text_boxes) boxes.push_back({b.x, b.y, b.w, b.h});
  j["text_boxes"] = std::move(boxes);
  return j.dump();
}

VectorScene scene_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("scene: ") + e.what());
  }
  try {
    if (j.value("format", "") != kFormat) throw DataError("scene: unsupported format tag");
    VectorScene scene;
    scene.width = j.at("width").get<int>();
    scene.height = j.at("height").get<int>();
    for (const json& jf : j.at("features")) {
      Feature f;
      f.geometry = geometry_from(jf.at("geometry").get<std::string>());
      const auto key = jf.at("class").get<std::string>();
      auto cls = class_by_key(key);
      if (!cls) throw DataError("scene: unknown class '" + key + "'");
      f.class_id = *cls;
      for (const json& p : jf.at("points")) f.points.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
      f.stroke_width = jf.value("stroke_width", 1);
      f.size = jf.value("size", 1);
      scene.features.push_back(std::move(f));
    }
    for (const json& b : j.at("text_boxes")) {
      scene.text_boxes.push_back({b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()});
    }
    validate_scene(scene);
    return scene;
  } catch (const json::exception& e) {
    throw DataError(std::string("scene: ") + e.what());
  }
}

std::uint64_t scene_hash(const VectorScene& scene) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : scene_to_json(scene)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mapgen
