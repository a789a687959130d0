#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mapgen/image.hpp"

namespace mapgen::png {

using Bytes = std::vector<std::uint8_t>;

Bytes encode_rgb(const RgbImage& image);
/// Palette PNG: pixel value = palette index.
Bytes encode_indexed(const LabelImage& indices, std::span<const Rgb> palette);
/// 1-bit grayscale PNG (mask bit set = white).
Bytes encode_mask(const BinaryMask& mask);

/// Decodes any PNG (gray, palette, RGBA, 16-bit) to 8-bit RGB. Alpha is dropped.
RgbImage decode_rgb(std::span<const std::uint8_t> bytes);

struct IndexedImage {
  LabelImage indices;
  std::vector<Rgb> palette;
};
/// Decodes a palette PNG keeping raw indices. Throws DataError for non-palette input.
IndexedImage decode_indexed(std::span<const std::uint8_t> bytes);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

inline void write_rgb(const std::filesystem::path& path, const RgbImage& image) {
  write_file(path, encode_rgb(image));
}
inline RgbImage read_rgb(const std::filesystem::path& path) { return decode_rgb(read_file(path)); }

}  // namespace mapgen::png
