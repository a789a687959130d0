#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mapgen/control_raster.hpp"
#include "mapgen/image.hpp"
#include "mapgen/styles.hpp"

namespace mapgen {

struct TileIndex {
  std::string sheet_id;
  int row = 0;
  int col = 0;
  int tile_size = 0;
  int sheet_width = 0;   // padded grid extent: cols * tile_size
  int sheet_height = 0;
  int crop_width = 0;    // extent before padding; stitch crops back to this
  int crop_height = 0;

  int rows() const { return sheet_height / tile_size; }
  int cols() const { return sheet_width / tile_size; }
  friend bool operator==(const TileIndex&, const TileIndex&) = default;
};

template <typename Image>
using Tiles = std::vector<std::pair<TileIndex, Image>>;

/// Nearest-neighbour replication by an integer factor.
RgbImage upsample(const RgbImage& sheet, int factor);
LabelImage upsample(const LabelImage& sheet, int factor);
ControlImage upsample(const ControlImage& sheet, int factor);

/// Row-major tiles. Sheets whose sides are not multiples of `tile_size` are padded on the
/// right/bottom with `pad` (background color / Background class); the index records the crop.
Tiles<RgbImage> tile(const RgbImage& sheet, int tile_size, Rgb pad, const std::string& sheet_id = "sheet");
Tiles<ControlImage> tile(const ControlImage& sheet, int tile_size, const std::string& sheet_id = "sheet");

/// Exact inverse of tile(). Throws DataError naming a missing or duplicate (row, col).
RgbImage stitch(const Tiles<RgbImage>& tiles);
ControlImage stitch(const Tiles<ControlImage>& tiles);

struct DatasetTriple {
  TileIndex index;
  ControlImage control;
  RgbImage target;
  std::string prompt;
  StyleId style = StyleId::kModern;
};

/// Masks text in both sheets, upsamples both by `factor`, tiles them identically and pairs
/// tiles by position under the style prompt.
std::vector<DatasetTriple> build_dataset(const ControlImage& control_sheet, const RgbImage& target_sheet,
                                         const BinaryMask& mask, const StyleSpec& style, int tile_size, int factor,
                                         const std::string& sheet_id = "sheet");

/// Writes <dir>/control/<name>.png, <dir>/target/<name>.png and appends one JSON line per triple
/// to <dir>/manifest.jsonl:
///   {"sheet_id", "row", "col", "control_path", "target_path", "prompt", "style"}
/// Paths are relative to `dir`.
void write_dataset(const std::filesystem::path& dir, const std::vector<DatasetTriple>& triples);
std::vector<DatasetTriple> read_dataset(const std::filesystem::path& dir);

}  // namespace mapgen
