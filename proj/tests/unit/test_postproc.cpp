#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "mapgen/control_raster.hpp"
#include "mapgen/postproc.hpp"
#include "mapgen/rng.hpp"
#include "mapgen/seed_select.hpp"
#include "mapgen/toy_corpus.hpp"

using namespace mapgen;
using namespace mapgen::postproc;

namespace {

struct Tile {
  VectorScene scene;
  ControlImage control;
  RgbImage image;
};

Tile make_tile(std::uint64_t seed, const StyleSpec& st, int noise, int size = 64) {
  auto d = default_density(size, size);
  d.text_boxes = 0;
  Tile t;
  t.scene = generate_toy_world(seed, size, size, d, 16);
  t.control = rasterize(t.scene, st.legend, size, size);
  t.image = render_reference(t.scene, st, noise);
  return t;
}

RgbImage jitter(const RgbImage& img, int amount, std::uint64_t seed) {
  Rng rng(seed);
  RgbImage out = img;
  for (auto& p : out.pixels()) {
    auto j = [&](std::uint8_t v) {
      return static_cast<std::uint8_t>(std::clamp<int>(v + static_cast<int>(rng.uniform_int(-amount, amount)), 0, 255));
    };
    p = Rgb{j(p.r), j(p.g), j(p.b)};
  }
  return out;
}

}  // namespace

TEST_CASE("default plans per style") {
  const auto modern = default_plan(style(StyleId::kModern));
  CHECK(modern.corrections.size() == style(StyleId::kModern).correctable_classes.size());
  CHECK_FALSE(modern.homogenize_background);
  CHECK_FALSE(modern.contour_overlay);
  std::vector<ClassId> corrected;
  for (const auto& c : modern.corrections) corrected.push_back(c.class_id);
  CHECK(std::find(corrected.begin(), corrected.end(), kBackgroundId) != corrected.end());
  CHECK(std::find(corrected.begin(), corrected.end(), id(Cls::kRiver)) != corrected.end());
  CHECK(std::find(corrected.begin(), corrected.end(), id(Cls::kBuilding)) != corrected.end());

  const auto vintage = default_plan(style(StyleId::kVintage));
  CHECK(vintage.corrections.empty());
  CHECK(vintage.homogenize_background == style(StyleId::kVintage).background());
  REQUIRE(vintage.contour_overlay);
  CHECK(vintage.contour_overlay->stroke == Rgb{139, 69, 19});

  const auto mid = default_plan(style(StyleId::kMidcentury));
  CHECK(mid.homogenize_background);
  CHECK_FALSE(mid.contour_overlay);

  for (const auto& st : builtin_styles()) {
    const auto p = default_plan(st);
    CHECK_NOTHROW(validate_plan(p, st));
    const auto back = plan_from_json(plan_to_json(p));
    CHECK(plan_to_json(back) == plan_to_json(p));
  }
  auto bad = modern;
  bad.corrections.push_back({id(Cls::kHighway), Rgb{}, 4});
  CHECK_THROWS_AS(validate_plan(bad, style(StyleId::kVintage)), ConfigError);
  auto neg = modern;
  neg.corrections[0].tolerance = -1;
  CHECK_THROWS_AS(validate_plan(neg, style(StyleId::kModern)), ConfigError);
}

TEST_CASE("correct_colors restores jittered palette colors exactly") {
  const auto& st = style(StyleId::kModern);
  const auto plan = default_plan(st);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto t = make_tile(seed, st, 0);
    CHECK(correct_colors(t.image, t.control, plan) == t.image);
    const auto noisy = jitter(t.image, 8, seed);
    const auto fixed = correct_colors(noisy, t.control, plan);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        const ClassId c = t.control.labels.at(x, y);
        const bool corrected = std::any_of(plan.corrections.begin(), plan.corrections.end(),
                                           [&](const ColorCorrection& k) { return k.class_id == c; });
        if (corrected)
          CHECK(fixed.at(x, y) == st.color(c));
        else
          CHECK(fixed.at(x, y) == noisy.at(x, y));
      }
  }
}

TEST_CASE("correct_colors leaves outliers of a class alone") {
  const auto& st = style(StyleId::kModern);
  const auto t = make_tile(3, st, 0);
  auto img = t.image;
  const ClassId river = id(Cls::kRiver);
  PostprocPlan plan;
  plan.corrections.push_back({river, st.color(river), 16});
  // paint one river pixel far from both the nominal and the modal color
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if (t.control.labels.at(x, y) == river) {
        img.at(x, y) = Rgb{255, 0, 255};
        const auto out = correct_colors(img, t.control, plan);
        CHECK(out.at(x, y) == Rgb{255, 0, 255});
        return;
      }
}

TEST_CASE("homogenize_background") {
  const auto& st = style(StyleId::kVintage);
  const auto t = make_tile(6, st, st.render_noise);
  const Rgb target = st.background();
  const auto out = homogenize_background(t.image, t.control, target);
  CHECK(seed::std_background(out, t.control).value == 0.0);
  std::size_t fg_changed = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      if (t.control.labels.at(x, y) == kBackgroundId)
        CHECK(out.at(x, y) == target);
      else
        fg_changed += out.at(x, y) != t.image.at(x, y);
    }
  CHECK(fg_changed == 0);
  CHECK(homogenize_background(out, t.control, target) == out);
  CHECK_THROWS_AS(homogenize_background(RgbImage(3, 3), t.control, target), DataError);
}

TEST_CASE("overlay_contours") {
  const RgbImage flat(32, 32, Rgb{240, 240, 240});
  CHECK(overlay_contours(flat, {}, kContourBrown, 1) == flat);
  const std::vector<std::vector<Point>> seg{{{3, 5}, {12, 5}}};
  const auto once = overlay_contours(flat, seg, kContourBrown, 1);
  CHECK(std::count(once.pixels().begin(), once.pixels().end(), kContourBrown) == 10);
  CHECK(overlay_contours(once, seg, kContourBrown, 1) == once);
  const auto wide = overlay_contours(flat, seg, kContourBrown, 3);
  CHECK(std::count(wide.pixels().begin(), wide.pixels().end(), kContourBrown) == 30);
}

TEST_CASE("contour polylines come from the scene") {
  VectorScene s{32, 32, {}, {}};
  s.features.push_back({Geometry::kPolyline, id(Cls::kContourLine), {{1, 1}, {10, 1}}, 1, 1});
  s.features.push_back({Geometry::kPolyline, id(Cls::kRoad), {{1, 5}, {10, 5}}, 3, 1});
  const auto c = contour_polylines(s);
  REQUIRE(c.size() == 1);
  CHECK(c[0].size() == 2);
}

TEST_CASE("postproc ops are idempotent on random tiles") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (const auto& st : builtin_styles()) {
      const auto t = make_tile(seed, st, std::max(st.render_noise, 8));
      const auto plan = default_plan(st);
      const auto contours = contour_polylines(t.scene);
      const auto c1 = correct_colors(t.image, t.control, plan);
      CHECK(correct_colors(c1, t.control, plan) == c1);
      const auto h1 = homogenize_background(t.image, t.control, st.background());
      CHECK(homogenize_background(h1, t.control, st.background()) == h1);
      const auto o1 = overlay_contours(t.image, contours, kContourBrown, 1);
      CHECK(overlay_contours(o1, contours, kContourBrown, 1) == o1);
      const auto a1 = apply_plan(t.image, t.control, plan, contours);
      CHECK(apply_plan(a1, t.control, plan, contours) == a1);
    }
  }
}
