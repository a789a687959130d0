#include "mapgen/toy_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mapgen/control_raster.hpp"
#include "mapgen/rng.hpp"

namespace mapgen {

namespace {

struct Canvas {
  int w;
  int h;
  Point clamp(double x, double y) const {
    return {std::clamp(static_cast<int>(std::lround(x)), 0, w - 1), std::clamp(static_cast<int>(std::lround(y)), 0, h - 1)};
  }
};

Feature polyline(Cls c, std::vector<Point> pts) {
  return Feature{Geometry::kPolyline, id(c), std::move(pts), feature_class(id(c)).default_pen, 1};
}

// Meandering walk: `n` legs of length in [lo, hi], heading drifting by up to `turn` radians.
std::vector<Point> walk(Rng& rng, const Canvas& cv, int n, double lo, double hi, double turn) {
  double x = rng.uniform(0, cv.w - 1);
  double y = rng.uniform(0, cv.h - 1);
  double heading = rng.uniform(0, 2 * std::numbers::pi);
  std::vector<Point> pts{cv.clamp(x, y)};
  for (int i = 0; i < n; ++i) {
    const double len = rng.uniform(lo, hi);
    x += len * std::cos(heading);
    y += len * std::sin(heading);
    Point p = cv.clamp(x, y);
    if (p != pts.back()) pts.push_back(p);
    heading += rng.uniform(-turn, turn);
  }
  return pts;
}

// Star-shaped blob around a random center.
std::vector<Point> blob(Rng& rng, const Canvas& cv, double rmin, double rmax, int vertices) {
  const double cx = rng.uniform(0, cv.w - 1);
  const double cy = rng.uniform(0, cv.h - 1);
  const double base = rng.uniform(rmin, rmax);
  std::vector<Point> pts;
  for (int i = 0; i < vertices; ++i) {
    const double a = 2 * std::numbers::pi * i / vertices;
    const double r = base * rng.uniform(0.65, 1.0);
    pts.push_back(cv.clamp(cx + r * std::cos(a), cy + r * std::sin(a)));
  }
  return pts;
}

std::vector<Point> ring(Rng& rng, const Canvas& cv, double rmin, double rmax) {
  const double cx = rng.uniform(0, cv.w - 1);
  const double cy = rng.uniform(0, cv.h - 1);
  const double rx = rng.uniform(rmin, rmax);
  const double ry = rx * rng.uniform(0.5, 1.0);
  constexpr int kVerts = 20;
  std::vector<Point> pts;
  for (int i = 0; i <= kVerts; ++i) {
    const double a = 2 * std::numbers::pi * (i % kVerts) / kVerts;
    Point p = cv.clamp(cx + rx * std::cos(a), cy + ry * std::sin(a));
    if (pts.empty() || p != pts.back()) pts.push_back(p);
  }
  return pts;
}

}  // namespace

Density empty_density() { return Density{}; }

Density default_density(int width, int height) {
  Density d;
  const double area = static_cast<double>(width) * height / (256.0 * 256.0);
  auto scaled = [&](double per256) { return static_cast<int>(std::lround(per256 * area)); };
  d[Cls::kBuilding] = scaled(48);
  d[Cls::kRoad] = scaled(6);
  d[Cls::kThroughRoad] = scaled(2);
  d[Cls::kConnectingRoad] = scaled(2);
  d[Cls::kPath] = scaled(4);
  d[Cls::kHighway] = scaled(1);
  d[Cls::kHighwayGallery] = scaled(1);
  d[Cls::kRailwaySingle] = scaled(2);
  d[Cls::kRailwayMulti] = scaled(1);
  d[Cls::kRailwayBridge] = scaled(1);
  d[Cls::kRiver] = scaled(2);
  d[Cls::kStream] = scaled(4);
  d[Cls::kLake] = scaled(3);
  d[Cls::kForest] = scaled(10);
  d[Cls::kTree] = scaled(40);
  d[Cls::kContourLine] = scaled(4);
  d[Cls::kDepthContour] = scaled(2);
  d.text_boxes = scaled(4);
  return d;
}

VectorScene generate_toy_world(std::uint64_t seed, int width, int height, const Density& density, int tile_size) {
  if (tile_size <= 0) throw ConfigError("tile size must be positive");
  if (width <= 0 || height <= 0 || width % tile_size != 0 || height % tile_size != 0) {
    throw ConfigError("extent " + std::to_string(width) + "x" + std::to_string(height) +
                      " is not a positive multiple of tile size " + std::to_string(tile_size));
  }
  for (int n : density.counts) {
    if (n < 0) throw ConfigError("feature densities must be >= 0");
  }
  if (density.text_boxes < 0) throw ConfigError("text box density must be >= 0");

  VectorScene scene{width, height, {}, {}};
  const Canvas cv{width, height};
  // Independent stream per class so changing one count leaves the other features in place.
  auto stream = [&](ClassId c) { return Rng(mix_seed(seed, 0x100u + c)); };
  const double scale = std::min(width, height);

  for (int ci = 0; ci < kNumClasses; ++ci) {
    const auto cls = static_cast<Cls>(ci);
    const int n = density.counts[static_cast<std::size_t>(ci)];
    if (n == 0 || cls == Cls::kBackground) continue;
    Rng rng = stream(static_cast<ClassId>(ci));
    for (int i = 0; i < n; ++i) {
      switch (cls) {
        case Cls::kBuilding: {
          const int w = static_cast<int>(rng.uniform_int(5, 12));
          const int h = static_cast<int>(rng.uniform_int(5, 12));
          const int x = static_cast<int>(rng.uniform_int(0, std::max(0, width - w - 1)));
          const int y = static_cast<int>(rng.uniform_int(0, std::max(0, height - h - 1)));
          std::vector<Point> pts{{x, y}, {std::min(x + w, width - 1), y}, {std::min(x + w, width - 1), std::min(y + h, height - 1)},
                                 {x, std::min(y + h, height - 1)}};
          scene.features.push_back({Geometry::kPolygon, id(cls), std::move(pts), 1, 1});
          break;
        }
        case Cls::kForest:
          scene.features.push_back({Geometry::kPolygon, id(cls), blob(rng, cv, 12, 28, 10), 1, 1});
          break;
        case Cls::kLake:
          scene.features.push_back({Geometry::kPolygon, id(cls), blob(rng, cv, 8, 18, 9), 1, 1});
          break;
        case Cls::kTree: {
          const Point p = cv.clamp(rng.uniform(0, width - 1), rng.uniform(0, height - 1));
          scene.features.push_back({Geometry::kPoint, id(cls), {p}, 1, feature_class(id(cls)).default_pen});
          break;
        }
        case Cls::kContourLine:
        case Cls::kDepthContour:
          scene.features.push_back(polyline(cls, ring(rng, cv, 10, 0.3 * scale)));
          break;
        case Cls::kRiver:
          scene.features.push_back(polyline(cls, walk(rng, cv, 6, 0.15 * scale, 0.3 * scale, 0.5)));
          break;
        case Cls::kStream:
          scene.features.push_back(polyline(cls, walk(rng, cv, 4, 10, 0.2 * scale, 0.8)));
          break;
        case Cls::kRailwayBridge:
        case Cls::kHighwayGallery:
          scene.features.push_back(polyline(cls, walk(rng, cv, 1, 10, 20, 0.0)));
          break;
        case Cls::kCoordinateGrid: {
          // n evenly spaced lines per axis
          for (int k = 1; k <= n; ++k) {
            const int gx = std::min(width - 1, k * width / (n + 1));
            const int gy = std::min(height - 1, k * height / (n + 1));
            scene.features.push_back(polyline(cls, {{gx, 0}, {gx, height - 1}}));
            scene.features.push_back(polyline(cls, {{0, gy}, {width - 1, gy}}));
          }
          i = n;
          break;
        }
        default:
          // road, rail and path variants
          scene.features.push_back(polyline(cls, walk(rng, cv, 5, 0.12 * scale, 0.3 * scale, 0.4)));
          break;
      }
    }
  }

  Rng text_rng(mix_seed(seed, 0x7e47u));
  for (int i = 0; i < density.text_boxes; ++i) {
    const int w = static_cast<int>(std::min<std::int64_t>(width, text_rng.uniform_int(8, 28)));
    const int h = static_cast<int>(std::min<std::int64_t>(height, text_rng.uniform_int(4, 7)));
    const int x = static_cast<int>(text_rng.uniform_int(0, width - w));
    const int y = static_cast<int>(text_rng.uniform_int(0, height - h));
    scene.text_boxes.push_back({x, y, w, h});
  }
  return scene;
}

RgbImage render_reference(const VectorScene& scene, const StyleSpec& style) {
  return render_reference(scene, style, style.render_noise);
}

RgbImage render_reference(const VectorScene& scene, const StyleSpec& style, int render_noise) {
  const ControlImage control = rasterize(scene, style.legend, scene.width, scene.height);
  RgbImage out(scene.width, scene.height);
  {
    auto src = control.labels.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = style.color(src[i]);
  }
  // Glyph-like blocks: dark cells with a light gap every third column.
  for (const Box& b : scene.text_boxes) {
    for (int y = b.y; y < b.y + b.h; ++y) {
      for (int x = b.x; x < b.x + b.w; ++x) {
        if (!out.contains(x, y)) continue;
        if ((x - b.x) % 3 != 2) out.at(x, y) = style.text_color;
      }
    }
  }
  if (render_noise > 0) {
    Rng rng(mix_seed(scene_hash(scene), 0x5ca9u + static_cast<std::uint64_t>(style.id)));
    auto jitter = [&](std::uint8_t v) {
      const auto d = rng.uniform_int(-render_noise, render_noise);
      return static_cast<std::uint8_t>(std::clamp<std::int64_t>(v + d, 0, 255));
    };
    for (Rgb& p : out.pixels()) {
      p.r = jitter(p.r);
      p.g = jitter(p.g);
      p.b = jitter(p.b);
    }
  }
  return out;
}

}  // namespace mapgen
