#include "mapgen/pipeline.hpp"

#include <algorithm>
#include <string>

#include "mapgen/control_raster.hpp"
#include "mapgen/errors.hpp"
#include "mapgen/mask_text.hpp"
#include "mapgen/rng.hpp"

namespace mapgen {

VectorScene toy_sheet_scene(const ToyDatasetSpec& spec, StyleId style, int index) {
  const int base_tile = spec.tile_size / spec.upsample;
  const std::uint64_t seed = mix_seed(spec.seed, static_cast<std::uint64_t>(style) * 1000003ULL + index);
  return generate_toy_world(seed, spec.sheet_size, spec.sheet_size, default_density(spec.sheet_size, spec.sheet_size),
                            base_tile);
}

std::vector<DatasetTriple> build_toy_dataset(const ToyDatasetSpec& spec) {
  if (spec.upsample < 1 || spec.tile_size < 1 || spec.tile_size % spec.upsample != 0)
    throw ConfigError("tile_size must be a positive multiple of the upsample factor");
  if (spec.sheet_size % (spec.tile_size / spec.upsample) != 0)
    throw ConfigError("sheet_size must be a multiple of tile_size / upsample");
  std::vector<DatasetTriple> out;
  for (StyleId sid : spec.styles) {
    const StyleSpec& st = style(sid);
    for (int i = spec.first_sheet; i < spec.first_sheet + spec.sheets_per_style; ++i) {
      const VectorScene scene = toy_sheet_scene(spec, sid, i);
      const ControlImage control = rasterize(scene, st.legend, scene.width, scene.height);
      const RgbImage target = render_reference(scene, st);
      const BinaryMask mask = build_text_mask(scene.text_boxes, scene.width, scene.height);
      auto triples = build_dataset(control, target, mask, st, spec.tile_size, spec.upsample,
                                   st.key + "_" + std::to_string(i));
      for (auto& t : triples) out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<DatasetTriple> content_rich(std::span<const DatasetTriple> triples, int min_classes) {
  std::vector<DatasetTriple> out;
  for (const auto& t : triples) {
    const auto h = label_histogram(t.control.labels);
    const auto present = std::count_if(h.begin(), h.end(), [](std::size_t n) { return n > 0; });
    if (present >= min_classes) out.push_back(t);
  }
  return out;
}

}  // namespace mapgen
