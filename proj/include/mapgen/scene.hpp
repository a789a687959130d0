#pragma once

#include <string>
#include <vector>

#include "mapgen/image.hpp"

namespace mapgen {

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct Box {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  friend bool operator==(const Box&, const Box&) = default;
};

enum class Geometry { kPolygon, kPolyline, kPoint };

struct Feature {
  Geometry geometry = Geometry::kPolyline;
  ClassId class_id = 0;
  std::vector<Point> points;
  int stroke_width = 1;  // polylines
  int size = 1;          // points
  friend bool operator==(const Feature&, const Feature&) = default;
};

/// Typed vector features plus text-label boxes on a pixel extent.
struct VectorScene {
  int width = 0;
  int height = 0;
  std::vector<Feature> features;
  std::vector<Box> text_boxes;
  friend bool operator==(const VectorScene&, const VectorScene&) = default;
};

/// Throws DataError when a class id is unknown or geometry/boxes leave the extent.
void validate_scene(const VectorScene& scene);

/// Scene file format ("mapgen.scene/1"):
///   {"format": "mapgen.scene/1", "width": W, "height": H,
///    "features": [{"geometry": "polygon"|"polyline"|"point", "class": "<class key>",
///                  "points": [[x, y], ...], "stroke_width": n, "size": n}, ...],
///    "text_boxes": [[x, y, w, h], ...]}
std::string scene_to_json(const VectorScene& scene);
VectorScene scene_from_json(const std::string& text);

/// Stable 64-bit content hash (FNV-1a over the canonical serialization).
std::uint64_t scene_hash(const VectorScene& scene);

}  // namespace mapgen
