#pragma once

#include <array>
#include <span>
#include <vector>

#include "rlplan/frenet.hpp"

namespace rlplan {

// Rectangle of size length x width centered at (cx, cy), long axis along
// `heading`.
struct OrientedRect {
  double cx = 0.0;
  double cy = 0.0;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;
};

// Counter-clockwise: front-right, front-left, rear-left, rear-right.
std::array<Point2, 4> corners(const OrientedRect& r);

/// Separating-axis test for two rectangles. Touching counts as overlap.
bool rects_overlap(const OrientedRect& a, const OrientedRect& b);

/// Separating-axis test over the edge normals of two convex polygons given in
/// counter-clockwise order. Touching counts as overlap.
bool convex_polygons_intersect(std::span<const Point2> a, std::span<const Point2> b);

double polygon_area(std::span<const Point2> poly);

// True when p is inside or within `tol` of a counter-clockwise convex polygon.
bool convex_contains(std::span<const Point2> poly, Point2 p, double tol = 0.0);

}  // namespace rlplan
