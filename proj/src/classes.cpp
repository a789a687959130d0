#include "mapgen/classes.hpp"

#include <array>
#include <string>

namespace mapgen {

namespace {

// z order: Background < Forest < Lake < Depth contour < Contour line < River < Stream < Path
//          < road variants < highway variants < railway variants < Building < Tree < Grid
constexpr std::array<FeatureClass, kNumClasses> kTable{{
    {0, "Background", "background", 0, {0, 0, 0}, 6},
    {1, "Building", "building", 16, {255, 0, 0}, 4},
    {2, "Coordinate grid", "coordinate_grid", 18, {255, 255, 255}, 1},
    {3, "Railway (single track)", "railway_single", 13, {128, 0, 128}, 2},
    {4, "Railway (multi track)", "railway_multi", 14, {200, 0, 200}, 3},
    {5, "Railway bridge", "railway_bridge", 15, {255, 0, 255}, 3},
    {6, "Highway", "highway", 11, {255, 128, 0}, 4},
    {7, "Highway gallery", "highway_gallery", 12, {128, 64, 0}, 4},
    {8, "Road", "road", 8, {255, 255, 0}, 3},
    {9, "Through road", "through_road", 9, {192, 192, 0}, 3},
    {10, "Connecting road", "connecting_road", 10, {128, 128, 0}, 2},
    {11, "Path", "path", 7, {160, 160, 160}, 2},
    {12, "Depth contour", "depth_contour", 3, {0, 0, 128}, 1},
    {13, "River", "river", 5, {0, 0, 255}, 4},
    {14, "Lake", "lake", 2, {0, 255, 255}, 6},
    {15, "Stream", "stream", 6, {0, 128, 255}, 2},
    {16, "Tree", "tree", 17, {0, 100, 0}, 3},
    {17, "Contour line", "contour_line", 4, {128, 64, 64}, 1},
    {18, "Forest", "forest", 1, {0, 255, 0}, 8},
}};

}  // namespace

std::span<const FeatureClass> class_table() { return kTable; }

const FeatureClass& feature_class(ClassId id) {
  if (id >= kNumClasses) throw DataError("unknown feature class id " + std::to_string(id));
  return kTable[id];
}

std::optional<ClassId> class_by_key(std::string_view key) {
  for (const auto& c : kTable) {
    if (c.key == key) return c.id;
  }
  return std::nullopt;
}

}  // namespace mapgen
