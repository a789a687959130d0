#include "mapgen/styles.hpp"

#include <string>

namespace mapgen {

namespace {

using C = Cls;

struct Entry {
  Cls cls;
  Rgb color;
};

StyleSpec make(StyleId id, std::string key, std::string display, int noise, std::initializer_list<Entry> entries,
               std::initializer_list<Cls> correctable) {
  StyleSpec s{id, key, std::move(display), "map in " + key + " style", {}, {}, {}, noise};
  for (const Entry& e : entries) s.palette[mapgen::id(e.cls)] = e.color;
  for (int c = 0; c < kNumClasses; ++c) {
    if (s.palette[c]) s.legend.push_back(static_cast<ClassId>(c));
  }
  for (Cls c : correctable) s.correctable_classes.push_back(mapgen::id(c));
  return s;
}

std::vector<StyleSpec> build() {
  std::vector<StyleSpec> v;
  // Full legend, clean digital rendering.
  v.push_back(make(StyleId::kModern, "modern", "Modern", 0,
                   {{C::kBackground, {246, 244, 236}},  {C::kBuilding, {70, 70, 70}},
                    {C::kCoordinateGrid, {200, 40, 40}}, {C::kRailwaySingle, {120, 30, 120}},
                    {C::kRailwayMulti, {160, 80, 200}},  {C::kRailwayBridge, {90, 0, 60}},
                    {C::kHighway, {250, 120, 20}},       {C::kHighwayGallery, {180, 90, 0}},
                    {C::kRoad, {255, 200, 60}},          {C::kThroughRoad, {230, 230, 120}},
                    {C::kConnectingRoad, {200, 170, 120}}, {C::kPath, {150, 120, 90}},
                    {C::kDepthContour, {80, 130, 250}},  {C::kRiver, {0, 90, 200}},
                    {C::kLake, {150, 210, 250}},         {C::kStream, {40, 180, 210}},
                    {C::kTree, {0, 110, 40}},            {C::kContourLine, {220, 150, 170}},
                    {C::kForest, {140, 210, 120}}},
                   {C::kBackground, C::kRiver, C::kBuilding}));
  // No railway bridge, highway gallery, through/connecting road or tree.
  v.push_back(make(StyleId::kMidcentury, "midcentury", "Mid-century", 12,
                   {{C::kBackground, {236, 226, 200}}, {C::kBuilding, {110, 40, 40}},
                    {C::kCoordinateGrid, {200, 40, 200}}, {C::kRailwaySingle, {20, 20, 20}},
                    {C::kRailwayMulti, {90, 90, 90}},   {C::kHighway, {220, 60, 40}},
                    {C::kRoad, {240, 170, 110}},        {C::kPath, {160, 110, 60}},
                    {C::kDepthContour, {20, 160, 190}}, {C::kRiver, {30, 70, 150}},
                    {C::kLake, {130, 180, 220}},        {C::kStream, {80, 150, 190}},
                    {C::kContourLine, {230, 110, 30}},  {C::kForest, {120, 170, 90}}},
                   {}));
  // Additionally omits highways and both contour classes.
  v.push_back(make(StyleId::kVintage, "vintage", "Vintage", 20,
                   {{C::kBackground, {250, 240, 215}}, {C::kBuilding, {200, 60, 60}},
                    {C::kCoordinateGrid, {60, 60, 60}}, {C::kRailwaySingle, {10, 10, 10}},
                    {C::kRailwayMulti, {120, 50, 20}},  {C::kRoad, {200, 140, 60}},
                    {C::kPath, {150, 150, 150}},        {C::kRiver, {20, 60, 190}},
                    {C::kLake, {120, 160, 240}},        {C::kStream, {70, 120, 200}},
                    {C::kForest, {60, 140, 60}}},
                   {}));
  return v;
}

}  // namespace

Rgb StyleSpec::color(ClassId c) const {
  if (!in_legend(c)) throw DataError("style " + key + ": class " + std::to_string(c) + " not in legend");
  return *palette[c];
}

std::span<const StyleSpec> builtin_styles() {
  static const std::vector<StyleSpec> styles = build();
  return styles;
}

const StyleSpec& style(StyleId id) { return builtin_styles()[static_cast<std::size_t>(id)]; }

const StyleSpec* find_style(std::string_view key) {
  for (const auto& s : builtin_styles()) {
    if (s.key == key) return &s;
  }
  return nullptr;
}

}  // namespace mapgen
