#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mapgen/classes.hpp"
#include "mapgen/image.hpp"

namespace mapgen {

/// The three built-in styles: a clean digital modern style and two scanned historical ones.
enum class StyleId : int { kModern = 0, kMidcentury = 1, kVintage = 2 };

inline constexpr int kNumStyles = 3;

struct StyleSpec {
  StyleId id;
  std::string key;           // "modern", "midcentury", "vintage"
  std::string display_name;
  std::string prompt;        // "map in <style> style"
  std::array<std::optional<Rgb>, kNumClasses> palette;  // nominal color for legend classes
  std::vector<ClassId> legend;                          // sorted, includes Background
  std::vector<ClassId> correctable_classes;
  int render_noise = 0;      // max per-channel jitter of scanned renderings
  Rgb text_color{25, 25, 25};

  bool in_legend(ClassId c) const { return c < kNumClasses && palette[c].has_value(); }
  Rgb color(ClassId c) const;
  Rgb background() const { return *palette[kBackgroundId]; }
};

std::span<const StyleSpec> builtin_styles();
const StyleSpec& style(StyleId id);
const StyleSpec* find_style(std::string_view key);

}  // namespace mapgen
