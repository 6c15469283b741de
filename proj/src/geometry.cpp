#include "rlplan/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rlplan {

std::array<Point2, 4> corners(const OrientedRect& r) {
  const double c = std::cos(r.heading), s = std::sin(r.heading);
  const double hl = 0.5 * r.length, hw = 0.5 * r.width;
  auto at = [&](double lx, double ly) {
    return Point2{r.cx + lx * c - ly * s, r.cy + lx * s + ly * c};
  };
  return {at(hl, -hw), at(hl, hw), at(-hl, hw), at(-hl, -hw)};
}

namespace {

struct Interval {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
};

Interval project(std::span<const Point2> pts, double ax, double ay) {
  Interval iv;
  for (const Point2& p : pts) {
    const double v = p.x * ax + p.y * ay;
    iv.lo = std::min(iv.lo, v);
    iv.hi = std::max(iv.hi, v);
  }
  return iv;
}

bool separated_on(std::span<const Point2> a, std::span<const Point2> b, double ax, double ay) {
  const Interval ia = project(a, ax, ay);
  const Interval ib = project(b, ax, ay);
  return ia.hi < ib.lo || ib.hi < ia.lo;
}

bool any_edge_separates(std::span<const Point2> poly, std::span<const Point2> a,
                        std::span<const Point2> b) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % n];
    const double ex = q.x - p.x, ey = q.y - p.y;
    if (ex == 0.0 && ey == 0.0) continue;
    if (separated_on(a, b, ey, -ex)) return true;
  }
  return false;
}

}  // namespace

bool rects_overlap(const OrientedRect& a, const OrientedRect& b) {
  const auto ca = corners(a);
  const auto cb = corners(b);
  for (double h : {a.heading, b.heading}) {
    const double c = std::cos(h), s = std::sin(h);
    if (separated_on(ca, cb, c, s) || separated_on(ca, cb, -s, c)) return false;
  }
  return true;
}

bool convex_polygons_intersect(std::span<const Point2> a, std::span<const Point2> b) {
  if (a.empty() || b.empty()) return false;
  return !any_edge_separates(a, a, b) && !any_edge_separates(b, a, b);
}

double polygon_area(std::span<const Point2> poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % poly.size()];
    twice += p.x * q.y - q.x * p.y;
  }
  return 0.5 * twice;
}

bool convex_contains(std::span<const Point2> poly, Point2 p, double tol) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % n];
    const double ex = b.x - a.x, ey = b.y - a.y;
    const double len = std::hypot(ex, ey);
    if (len == 0.0) continue;
    // Signed distance to the left of edge a->b; inside is non-negative.
    const double side = (ex * (p.y - a.y) - ey * (p.x - a.x)) / len;
    if (side < -tol) return false;
  }
  return true;
}

}  // namespace rlplan
