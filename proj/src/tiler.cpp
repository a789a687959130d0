#include "mapgen/tiler.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "mapgen/mask_text.hpp"
#include "mapgen/png_io.hpp"

namespace mapgen {

namespace {

template <typename Pixel>
Grid<Pixel> upsample_grid(const Grid<Pixel>& in, int factor) {
  if (factor < 1) throw ConfigError("upsample factor must be >= 1, got " + std::to_string(factor));
  if (factor == 1) return in;
  Grid<Pixel> out(in.width() * factor, in.height() * factor);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out.at(x, y) = in.at(x / factor, y / factor);
  return out;
}

template <typename Pixel>
Tiles<Grid<Pixel>> tile_grid(const Grid<Pixel>& sheet, int tile_size, Pixel pad, const std::string& sheet_id) {
  if (tile_size < 1) throw ConfigError("tile size must be >= 1");
  if (sheet.empty()) throw DataError("tile: empty sheet");
  const int cols = (sheet.width() + tile_size - 1) / tile_size;
  const int rows = (sheet.height() + tile_size - 1) / tile_size;
  Tiles<Grid<Pixel>> out;
  out.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      TileIndex idx{sheet_id, r, c, tile_size, cols * tile_size, rows * tile_size, sheet.width(), sheet.height()};
      Grid<Pixel> t(tile_size, tile_size, pad);
      for (int y = 0; y < tile_size; ++y) {
        const int sy = r * tile_size + y;
        if (sy >= sheet.height()) break;
        for (int x = 0; x < tile_size; ++x) {
          const int sx = c * tile_size + x;
          if (sx >= sheet.width()) break;
          t.at(x, y) = sheet.at(sx, sy);
        }
      }
      out.emplace_back(std::move(idx), std::move(t));
    }
  }
  return out;
}

std::string cell(int r, int c) { return "(row " + std::to_string(r) + ", col " + std::to_string(c) + ")"; }

template <typename Pixel, typename Get>
Grid<Pixel> stitch_grid(std::size_t count, Get get) {
  if (count == 0) throw DataError("stitch: no tiles");
  const TileIndex& ref = get(0).first;
  if (ref.tile_size < 1 || ref.sheet_width % ref.tile_size != 0 || ref.sheet_height % ref.tile_size != 0) {
    throw DataError("stitch: inconsistent tile index");
  }
  const int rows = ref.rows();
  const int cols = ref.cols();
  std::vector<int> seen(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), -1);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& [idx, img] = get(i);
    if (idx.sheet_id != ref.sheet_id || idx.tile_size != ref.tile_size || idx.sheet_width != ref.sheet_width ||
        idx.sheet_height != ref.sheet_height || idx.crop_width != ref.crop_width || idx.crop_height != ref.crop_height) {
      throw DataError("stitch: tile " + cell(idx.row, idx.col) + " belongs to a different grid");
    }
    if (idx.row < 0 || idx.col < 0 || idx.row >= rows || idx.col >= cols) {
      throw DataError("stitch: tile " + cell(idx.row, idx.col) + " outside the grid");
    }
    if (img.width() != idx.tile_size || img.height() != idx.tile_size) {
      throw DataError("stitch: tile " + cell(idx.row, idx.col) + " has wrong dimensions");
    }
    int& slot = seen[static_cast<std::size_t>(idx.row) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(idx.col)];
    if (slot >= 0) throw DataError("stitch: duplicate tile " + cell(idx.row, idx.col));
    slot = static_cast<int>(i);
  }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (seen[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)] < 0)
        throw DataError("stitch: missing tile " + cell(r, c));

  Grid<Pixel> out(ref.crop_width, ref.crop_height);
  const int ts = ref.tile_size;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& [idx, img] = get(i);
    for (int y = 0; y < ts; ++y) {
      const int sy = idx.row * ts + y;
      if (sy >= out.height()) break;
      for (int x = 0; x < ts; ++x) {
        const int sx = idx.col * ts + x;
        if (sx >= out.width()) break;
        out.at(sx, sy) = img.at(x, y);
      }
    }
  }
  return out;
}

std::string tile_name(const TileIndex& idx) {
  return idx.sheet_id + "_r" + std::to_string(idx.row) + "_c" + std::to_string(idx.col);
}

}  // namespace

RgbImage upsample(const RgbImage& sheet, int factor) { return upsample_grid(sheet, factor); }
LabelImage upsample(const LabelImage& sheet, int factor) { return upsample_grid(sheet, factor); }
ControlImage upsample(const ControlImage& sheet, int factor) {
  return ControlImage{upsample_grid(sheet.labels, factor), sheet.legend};
}

Tiles<RgbImage> tile(const RgbImage& sheet, int tile_size, Rgb pad, const std::string& sheet_id) {
  return tile_grid(sheet, tile_size, pad, sheet_id);
}

Tiles<ControlImage> tile(const ControlImage& sheet, int tile_size, const std::string& sheet_id) {
  auto raw = tile_grid(sheet.labels, tile_size, kBackgroundId, sheet_id);
  Tiles<ControlImage> out;
  out.reserve(raw.size());
  for (auto& [idx, labels] : raw) out.emplace_back(std::move(idx), ControlImage{std::move(labels), sheet.legend});
  return out;
}

RgbImage stitch(const Tiles<RgbImage>& tiles) {
  return stitch_grid<Rgb>(tiles.size(), [&](std::size_t i) -> const std::pair<TileIndex, RgbImage>& { return tiles[i]; });
}

ControlImage stitch(const Tiles<ControlImage>& tiles) {
  std::vector<std::pair<TileIndex, LabelImage>> view;
  view.reserve(tiles.size());
  for (const auto& [idx, c] : tiles) view.emplace_back(idx, c.labels);
  auto labels = stitch_grid<ClassId>(view.size(), [&](std::size_t i) -> const std::pair<TileIndex, LabelImage>& { return view[i]; });
  return ControlImage{std::move(labels), tiles.front().second.legend};
}

std::vector<DatasetTriple> build_dataset(const ControlImage& control_sheet, const RgbImage& target_sheet,
                                         const BinaryMask& mask, const StyleSpec& style, int tile_size, int factor,
                                         const std::string& sheet_id) {
  require_same_shape(control_sheet.labels, target_sheet, "build_dataset control/target");
  require_same_shape(control_sheet.labels, mask, "build_dataset control/mask");
  const ControlImage control = upsample(apply_mask(control_sheet, mask), factor);
  const RgbImage target = upsample(apply_mask(target_sheet, mask, style.background()), factor);
  auto control_tiles = tile(control, tile_size, sheet_id);
  auto target_tiles = tile(target, tile_size, style.background(), sheet_id);
  std::vector<DatasetTriple> out;
  out.reserve(control_tiles.size());
  for (std::size_t i = 0; i < control_tiles.size(); ++i) {
    out.push_back(DatasetTriple{control_tiles[i].first, std::move(control_tiles[i].second),
                                std::move(target_tiles[i].second), style.prompt, style.id});
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir, const std::vector<DatasetTriple>& triples) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "control");
  fs::create_directories(dir / "target");
  std::ofstream manifest(dir / "manifest.jsonl", std::ios::app);
  if (!manifest) throw IoError("cannot open manifest in " + dir.string());
  for (const auto& t : triples) {
    const std::string stem = tile_name(t.index) + "_" + style(t.style).key;
    const fs::path control_rel = fs::path("control") / (stem + ".png");
    const fs::path target_rel = fs::path("target") / (stem + ".png");
    png::write_file(dir / control_rel, encode_control_png(t.control));
    png::write_rgb(dir / target_rel, t.target);
    nlohmann::json rec{{"sheet_id", t.index.sheet_id},
                       {"row", t.index.row},
                       {"col", t.index.col},
                       {"control_path", control_rel.generic_string()},
                       {"target_path", target_rel.generic_string()},
                       {"prompt", t.prompt},
                       {"style", style(t.style).key},
                       {"tile_size", t.index.tile_size},
                       {"sheet_width", t.index.sheet_width},
                       {"sheet_height", t.index.sheet_height},
                       {"crop_width", t.index.crop_width},
                       {"crop_height", t.index.crop_height}};
    manifest << rec.dump() << '\n';
  }
}

std::vector<DatasetTriple> read_dataset(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.jsonl");
  if (!manifest) throw IoError("cannot open " + (dir / "manifest.jsonl").string());
  std::vector<DatasetTriple> out;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      const StyleSpec* st = find_style(rec.at("style").get<std::string>());
      if (!st) throw DataError("dataset: unknown style in manifest");
      DatasetTriple t;
      t.style = st->id;
      t.prompt = rec.at("prompt").get<std::string>();
      t.control = decode_control_png(png::read_file(dir / rec.at("control_path").get<std::string>()), st->legend);
      t.target = png::read_rgb(dir / rec.at("target_path").get<std::string>());
      const int ts = rec.value("tile_size", t.target.width());
      t.index = TileIndex{rec.at("sheet_id").get<std::string>(), rec.at("row").get<int>(), rec.at("col").get<int>(), ts,
                          rec.value("sheet_width", ts), rec.value("sheet_height", ts), rec.value("crop_width", ts),
                          rec.value("crop_height", ts)};
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("dataset manifest: ") + e.what());
    }
  }
  return out;
}

}  // namespace mapgen
