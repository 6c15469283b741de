#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "rlplan/frenet.hpp"
#include "rlplan/geometry.hpp"
#include "rlplan/rng.hpp"
#include "rlplan/world.hpp"

namespace testing_support {

using rlplan::Point2;

// Clips convex polygon `subject` against convex `clip` (both CCW).
inline std::vector<Point2> clip_convex(std::vector<Point2> subject, const std::vector<Point2>& clip) {
  for (std::size_t i = 0; i < clip.size() && !subject.empty(); ++i) {
    const Point2 a = clip[i], b = clip[(i + 1) % clip.size()];
    auto side = [&](Point2 p) { return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x); };
    std::vector<Point2> out;
    for (std::size_t j = 0; j < subject.size(); ++j) {
      const Point2 p = subject[j], q = subject[(j + 1) % subject.size()];
      const double sp = side(p), sq = side(q);
      if (sp >= 0) out.push_back(p);
      if ((sp >= 0) != (sq >= 0)) {
        const double t = sp / (sp - sq);
        out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
      }
    }
    subject = std::move(out);
  }
  return subject;
}

inline double shoelace(const std::vector<Point2>& p) {
  double a = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Point2& u = p[i];
    const Point2& v = p[(i + 1) % p.size()];
    a += u.x * v.y - v.x * u.y;
  }
  return 0.5 * a;
}

inline std::vector<Point2> rect_polygon(const rlplan::OrientedRect& r) {
  const auto c = rlplan::corners(r);
  return {c.begin(), c.end()};
}

inline rlplan::OrientedRect random_rect(rlplan::Rng& rng, double spread) {
  return {rlplan::uniform(rng, -spread, spread), rlplan::uniform(rng, -spread, spread),
          rlplan::uniform(rng, -std::numbers::pi, std::numbers::pi), rlplan::uniform(rng, 0.5, 6.0),
          rlplan::uniform(rng, 0.3, 3.0)};
}

// Arc of radius R centered at the origin, counter-clockwise from angle a0.
inline std::vector<Point2> arc_waypoints(double radius, double a0, double a1, int n) {
  std::vector<Point2> pts;
  for (int i = 0; i <= n; ++i) {
    const double a = a0 + (a1 - a0) * i / n;
    pts.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return pts;
}

// A world with no randomness: straight road, no tracking noise, no lane
// changes. Participants are added by the caller.
inline rlplan::WorldState quiet_world(int scenario = 1) {
  rlplan::WorldConfig cfg;
  cfg.tracking_sigma_pos = 0.0;
  cfg.tracking_sigma_speed = 0.0;
  cfg.lane_change_rate = 0.0;
  rlplan::ScenarioSpec spec = rlplan::scenario_spec(scenario);
  spec.min_static = spec.max_static = 0;
  spec.min_dynamic = spec.max_dynamic = 0;
  return rlplan::spawn_scenario(spec, 7, cfg);
}

inline rlplan::VehicleState vehicle(int id, double s, double d, double speed, bool is_static) {
  rlplan::VehicleState v;
  v.id = id;
  v.frenet.s = s;
  v.frenet.d = d;
  v.frenet.s_d = speed;
  v.is_static = is_static;
  v.desired_speed = speed;
  v.length = 4.5;
  v.width = 1.8;
  return v;
}

}  // namespace testing_support
