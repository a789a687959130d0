#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mapgen/styles.hpp"
#include "mapgen/tiler.hpp"
#include "mapgen/toy_corpus.hpp"

namespace mapgen {

/// A procedurally generated training/evaluation corpus: scenes rendered in each style, text
/// masked, upsampled and tiled.
struct ToyDatasetSpec {
  std::uint64_t seed = 1;
  int sheets_per_style = 4;
  int sheet_size = 128;  // before upsampling
  int tile_size = 32;    // after upsampling
  int upsample = 2;
  std::vector<StyleId> styles{StyleId::kModern, StyleId::kVintage};
  int first_sheet = 0;   // offset into the sheet sequence; disjoint ranges give disjoint splits
};

/// Throws ConfigError if tile_size is not a multiple of upsample or sheet sizes do not tile.
std::vector<DatasetTriple> build_toy_dataset(const ToyDatasetSpec& spec);

/// Triples whose control holds at least `min_classes` distinct classes, Background included.
/// Evaluation and image logs use these so that empty tiles do not dominate the averages.
std::vector<DatasetTriple> content_rich(std::span<const DatasetTriple> triples, int min_classes = 3);

/// Scene for sheet `index` of `style` under `spec` (pre-upsampling extent).
VectorScene toy_sheet_scene(const ToyDatasetSpec& spec, StyleId style, int index);

}  // namespace mapgen
