#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mapgen/errors.hpp"

namespace mapgen {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Sum of absolute channel differences.
inline int channel_sum_distance(Rgb a, Rgb b) {
  auto d = [](int x, int y) { return x > y ? x - y : y - x; };
  return d(a.r, b.r) + d(a.g, b.g) + d(a.b, b.b);
}

/// Largest absolute per-channel difference.
inline int channel_max_distance(Rgb a, Rgb b) {
  auto d = [](int x, int y) { return x > y ? x - y : y - x; };
  int m = d(a.r, b.r);
  m = std::max(m, d(a.g, b.g));
  return std::max(m, d(a.b, b.b));
}

/// Dense row-major 2-D grid of pixels.
template <typename Pixel>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, Pixel fill = Pixel{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw ConfigError("negative grid dimensions");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Pixel& at(int x, int y) { return data_[index(x, y)]; }
  const Pixel& at(int x, int y) const { return data_[index(x, y)]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::span<Pixel> pixels() { return data_; }
  std::span<const Pixel> pixels() const { return data_; }

  bool same_shape(const auto& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Pixel> data_;
};

using ClassId = std::uint8_t;

/// RGB raster: a map sheet or a single tile.
using RgbImage = Grid<Rgb>;
/// Per-pixel class labels.
using LabelImage = Grid<ClassId>;
/// true = masked (text region).
using BinaryMask = Grid<std::uint8_t>;

inline void require_same_shape(const auto& a, const auto& b, const std::string& what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DataError(what + ": dimension mismatch (" + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()) + ")");
  }
}

}  // namespace mapgen
