#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <span>
#include <vector>

#include "mapgen/scene.hpp"

// Integer stamping rules shared by the control rasterizer and the contour overlay.
//
// Polylines: every Bresenham pixel of each segment (endpoints inclusive) is stamped with a
// span of `width` pixels perpendicular to the segment's major axis. Interior vertices get a
// full width x width square (square join). Ends are flat: a horizontal run of n pixels at
// width w covers exactly n * w pixels.
// Polygons: even-odd fill of pixel centers.
// Points: size x size square.
namespace mapgen::raster {

/// Offsets [lo, hi] of a centered run of `width` pixels.
inline std::pair<int, int> centered_run(int width) {
  const int lo = -((width - 1) / 2);
  return {lo, lo + width - 1};
}

template <typename Plot>
void stamp_square(Point c, int width, Plot&& plot) {
  const auto [lo, hi] = centered_run(width);
  for (int dy = lo; dy <= hi; ++dy)
    for (int dx = lo; dx <= hi; ++dx) plot(c.x + dx, c.y + dy);
}

template <typename Plot>
void stamp_segment(Point a, Point b, int width, Plot&& plot) {
  const int dx = std::abs(b.x - a.x);
  const int dy = -std::abs(b.y - a.y);
  const int sx = a.x < b.x ? 1 : -1;
  const int sy = a.y < b.y ? 1 : -1;
  const bool x_major = dx >= -dy;
  const auto [lo, hi] = centered_run(width);
  int err = dx + dy;
  int x = a.x;
  int y = a.y;
  for (;;) {
    for (int o = lo; o <= hi; ++o) {
      if (x_major)
        plot(x, y + o);
      else
        plot(x + o, y);
    }
    if (x == b.x && y == b.y) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
}

template <typename Plot>
void stamp_polyline(std::span<const Point> pts, int width, Plot&& plot) {
  if (pts.empty()) return;
  if (pts.size() == 1) {
    stamp_square(pts[0], width, plot);
    return;
  }
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) stamp_segment(pts[i], pts[i + 1], width, plot);
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) stamp_square(pts[i], width, plot);
}

template <typename Plot>
void fill_polygon(std::span<const Point> pts, Plot&& plot) {
  if (pts.size() < 3) {
    for (Point p : pts) plot(p.x, p.y);
    return;
  }
  int ymin = pts[0].y;
  int ymax = pts[0].y;
  for (Point p : pts) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  std::vector<double> xs;
  for (int y = ymin; y <= ymax; ++y) {
    const double cy = y + 0.5;
    xs.clear();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Point p = pts[i];
      const Point q = pts[(i + 1) % pts.size()];
      const double py = p.y + 0.5;
      const double qy = q.y + 0.5;
      if ((py <= cy && qy > cy) || (qy <= cy && py > cy)) {
        const double t = (cy - py) / (qy - py);
        xs.push_back(p.x + 0.5 + t * (q.x - p.x));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      // pixel centers x + 0.5 in [xs[k], xs[k+1])
      const int x0 = static_cast<int>(std::ceil(xs[k] - 0.5));
      const int x1 = static_cast<int>(std::ceil(xs[k + 1] - 0.5)) - 1;
      for (int x = x0; x <= x1; ++x) plot(x, y);
    }
  }
}

template <typename Plot>
void draw_feature(const Feature& f, Plot&& plot) {
  switch (f.geometry) {
    case Geometry::kPolygon: fill_polygon(f.points, plot); break;
    case Geometry::kPolyline: stamp_polyline(f.points, f.stroke_width, plot); break;
    case Geometry::kPoint:
      for (Point p : f.points) stamp_square(p, f.size, plot);
      break;
  }
}

}  // namespace mapgen::raster
