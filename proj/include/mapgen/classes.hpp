#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "mapgen/image.hpp"

namespace mapgen {

/// Global feature class ids. Contiguous from 0; Background is 0.
enum class Cls : ClassId {
  kBackground = 0,
  kBuilding,
  kCoordinateGrid,
  kRailwaySingle,
  kRailwayMulti,
  kRailwayBridge,
  kHighway,
  kHighwayGallery,
  kRoad,
  kThroughRoad,
  kConnectingRoad,
  kPath,
  kDepthContour,
  kRiver,
  kLake,
  kStream,
  kTree,
  kContourLine,
  kForest,
};

inline constexpr int kNumClasses = 19;
inline constexpr ClassId kBackgroundId = 0;

constexpr ClassId id(Cls c) { return static_cast<ClassId>(c); }

struct FeatureClass {
  ClassId id;
  std::string_view name;   // display name, e.g. "Railway (single track)"
  std::string_view key;    // snake_case token used in files and the HTTP API
  int z_priority;          // higher draws on top
  Rgb control_color;       // exact color of this class in control PNGs
  int default_pen;         // stroke width / point size in pixels
};

/// The fixed class table, indexed by id.
std::span<const FeatureClass> class_table();

const FeatureClass& feature_class(ClassId id);
std::optional<ClassId> class_by_key(std::string_view key);

}  // namespace mapgen
