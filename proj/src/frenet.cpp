#include "rlplan/frenet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "rlplan/error.hpp"

namespace rlplan {

namespace {

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a < 0.0) a += two_pi;
  return a - std::numbers::pi;
}

struct SegmentGeometry {
  double x0, y0, dx, dy;  // chord start and vector
  double h0, dh;          // heading at start and its change over the segment
};

SegmentGeometry segment_geometry(const std::vector<RefPoint>& pts, std::size_t k) {
  const RefPoint& a = pts[k];
  const RefPoint& b = pts[k + 1];
  return {a.x, a.y, b.x - a.x, b.y - a.y, a.heading, wrap_angle(b.heading - a.heading)};
}

// Signed tangential residual of point (px, py) against the frame at parameter
// u of a segment. Zero at the foot point; decreasing in u near the line.
double tangential_residual(const SegmentGeometry& g, double u, double px, double py) {
  const double fx = g.x0 + u * g.dx;
  const double fy = g.y0 + u * g.dy;
  const double h = g.h0 + u * g.dh;
  return (px - fx) * std::cos(h) + (py - fy) * std::sin(h);
}

double bisect(const SegmentGeometry& g, double lo, double hi, double px, double py) {
  // Invariant: residual(lo) >= 0 >= residual(hi).
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (tangential_residual(g, mid, px, py) >= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

ReferenceLine ReferenceLine::build(const std::vector<Point2>& waypoints, double ds) {
  if (!(ds > 0.0) || !std::isfinite(ds)) {
    throw Error(ErrorCode::degenerate_input, "reference line spacing must be positive");
  }
  if (waypoints.size() < 2) {
    throw Error(ErrorCode::degenerate_input, "reference line needs at least two waypoints");
  }

  std::vector<double> cumulative(waypoints.size(), 0.0);
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const double seg = std::hypot(waypoints[i].x - waypoints[i - 1].x,
                                  waypoints[i].y - waypoints[i - 1].y);
    if (!(seg > 1e-12)) {
      throw Error(ErrorCode::degenerate_input,
                  "duplicate consecutive waypoints at index " + std::to_string(i));
    }
    cumulative[i] = cumulative[i - 1] + seg;
  }
  const double total = cumulative.back();
  const auto count = static_cast<std::size_t>(std::floor(total / ds + 1e-9)) + 1;
  if (count < 2) {
    throw Error(ErrorCode::degenerate_input, "polyline shorter than one sample spacing");
  }

  ReferenceLine line;
  line.ds_ = ds;
  line.samples_.resize(count);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double s = static_cast<double>(k) * ds;
    while (seg + 2 < waypoints.size() && cumulative[seg + 1] < s) ++seg;
    const double u = (s - cumulative[seg]) / (cumulative[seg + 1] - cumulative[seg]);
    RefPoint& p = line.samples_[k];
    p.s = s;
    p.x = waypoints[seg].x + u * (waypoints[seg + 1].x - waypoints[seg].x);
    p.y = waypoints[seg].y + u * (waypoints[seg + 1].y - waypoints[seg].y);
  }

  auto& pts = line.samples_;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t a = k == 0 ? 0 : k - 1;
    const std::size_t b = k + 1 == count ? k : k + 1;
    pts[k].heading = std::atan2(pts[b].y - pts[a].y, pts[b].x - pts[a].x);
  }
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t a = k == 0 ? 0 : k - 1;
    const std::size_t b = k + 1 == count ? k : k + 1;
    const double span = static_cast<double>(b - a) * ds;
    pts[k].curvature = wrap_angle(pts[b].heading - pts[a].heading) / span;
  }
  return line;
}

std::size_t ReferenceLine::segment_for(double s) const {
  const double raw = std::floor(s / ds_);
  if (raw <= 0.0) return 0;
  const auto last = samples_.size() - 2;
  if (raw >= static_cast<double>(last)) return last;
  return static_cast<std::size_t>(raw);
}

RefFrame ReferenceLine::frame_at(double s) const {
  const std::size_t k = segment_for(s);
  const SegmentGeometry g = segment_geometry(samples_, k);
  const double u = (s - samples_[k].s) / ds_;
  return {g.x0 + u * g.dx, g.y0 + u * g.dy, g.h0 + u * g.dh, g.dh / ds_};
}

std::size_t ReferenceLine::nearest_index(double x, double y, std::size_t hint) const {
  auto dist2 = [&](std::size_t i) {
    const double dx = samples_[i].x - x;
    const double dy = samples_[i].y - y;
    return dx * dx + dy * dy;
  };
  std::size_t best = std::min(hint, samples_.size() - 1);
  double best_d2 = dist2(best);
  for (bool moved = true; moved;) {
    moved = false;
    for (std::size_t cand : {best + 1, best - 1}) {
      if (cand >= samples_.size()) continue;  // best - 1 wraps when best == 0
      const double d2 = dist2(cand);
      if (d2 < best_d2) {
        best = cand;
        best_d2 = d2;
        moved = true;
      }
    }
  }
  // A local minimum farther than a few spacings away may sit on the wrong
  // lobe of a winding line.
  if (best_d2 > 16.0 * ds_ * ds_) {
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const double d2 = dist2(i);
      if (d2 < best_d2) {
        best = i;
        best_d2 = d2;
      }
    }
  }
  return best;
}

ReferenceLine build_reference_line(const std::vector<Point2>& waypoints, double ds) {
  return ReferenceLine::build(waypoints, ds);
}

std::vector<Point2> load_waypoints(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open waypoint file " + path);
  std::vector<Point2> pts;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    Point2 p;
    if (!(ss >> p.x)) continue;
    if (!(ss >> p.y)) {
      throw Error(ErrorCode::degenerate_input,
                  path + ":" + std::to_string(line_no) + ": expected `x y`");
    }
    pts.push_back(p);
  }
  return pts;
}

FrenetState cartesian_to_frenet(const ReferenceLine& line, const Pose& pose, double corridor,
                                std::optional<std::size_t> hint) {
  const auto& pts = line.samples();
  const std::size_t n = pts.size();
  const std::size_t nearest =
      hint ? line.nearest_index(pose.x, pose.y, *hint)
           : line.nearest_index(pose.x, pose.y, 0);

  double best_u = 0.0;
  std::size_t best_k = 0;
  double best_abs_d = std::numeric_limits<double>::infinity();
  bool found = false;

  auto consider = [&](std::size_t k, double u) {
    const SegmentGeometry g = segment_geometry(pts, k);
    const double h = g.h0 + u * g.dh;
    const double d = -(pose.x - (g.x0 + u * g.dx)) * std::sin(h) +
                     (pose.y - (g.y0 + u * g.dy)) * std::cos(h);
    if (std::abs(d) < best_abs_d) {
      best_abs_d = std::abs(d);
      best_u = u;
      best_k = k;
      found = true;
    }
  };

  const std::size_t k_lo = nearest >= 2 ? nearest - 2 : 0;
  const std::size_t k_hi = std::min(nearest + 1, n - 2);
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    const SegmentGeometry g = segment_geometry(pts, k);
    const double f0 = tangential_residual(g, 0.0, pose.x, pose.y);
    const double f1 = tangential_residual(g, 1.0, pose.x, pose.y);
    if (f0 >= 0.0 && f1 <= 0.0) consider(k, bisect(g, 0.0, 1.0, pose.x, pose.y));
  }

  if (!found) {
    // Before the first sample or past the last one: extend the end segment.
    const bool at_start = nearest <= 1;
    const std::size_t k = at_start ? 0 : n - 2;
    const SegmentGeometry g = segment_geometry(pts, k);
    double lo = at_start ? -1.0 : 0.0;
    double hi = at_start ? 0.0 : 2.0;
    for (int i = 0; i < 64; ++i) {
      if (at_start && tangential_residual(g, lo, pose.x, pose.y) < 0.0) {
        lo *= 2.0;
      } else if (!at_start && tangential_residual(g, hi, pose.x, pose.y) > 0.0) {
        hi *= 2.0;
      } else {
        break;
      }
    }
    if (tangential_residual(g, lo, pose.x, pose.y) >= 0.0 &&
        tangential_residual(g, hi, pose.x, pose.y) <= 0.0) {
      consider(k, bisect(g, lo, hi, pose.x, pose.y));
    }
  }
  if (!found || best_abs_d > corridor) {
    throw Error(ErrorCode::out_of_corridor, "pose is more than " + std::to_string(corridor) +
                                                " m from the reference line");
  }

  const SegmentGeometry g = segment_geometry(pts, best_k);
  const double h = g.h0 + best_u * g.dh;
  const double kappa = g.dh / line.spacing();
  const double tx = std::cos(h), ty = std::sin(h);
  const double nx = -ty, ny = tx;
  const double rx = pose.x - (g.x0 + best_u * g.dx);
  const double ry = pose.y - (g.y0 + best_u * g.dy);

  FrenetState fs;
  fs.s = pts[best_k].s + best_u * line.spacing();
  fs.d = rx * nx + ry * ny;
  const double one_minus_kd = 1.0 - kappa * fs.d;
  if (!(one_minus_kd > 0.0)) {
    throw Error(ErrorCode::singular_projection, "pose lies beyond the curvature center");
  }
  const double vx = pose.v * std::cos(pose.heading), vy = pose.v * std::sin(pose.heading);
  const double ax = pose.a * std::cos(pose.heading), ay = pose.a * std::sin(pose.heading);
  fs.s_d = (vx * tx + vy * ty) / one_minus_kd;
  fs.d_d = vx * nx + vy * ny;
  fs.s_dd = (ax * tx + ay * ty + 2.0 * kappa * fs.s_d * fs.d_d) / one_minus_kd;
  fs.d_dd = ax * nx + ay * ny - kappa * one_minus_kd * fs.s_d * fs.s_d;
  return fs;
}

Pose frenet_to_cartesian(const ReferenceLine& line, const FrenetState& fs) {
  const RefFrame f = line.frame_at(fs.s);
  const double one_minus_kd = 1.0 - f.curvature * fs.d;
  if (!(one_minus_kd > 0.0)) {
    throw Error(ErrorCode::singular_projection, "1 - d * curvature must be positive");
  }
  const double tx = std::cos(f.heading), ty = std::sin(f.heading);
  const double nx = -ty, ny = tx;

  Pose pose;
  pose.x = f.x + fs.d * nx;
  pose.y = f.y + fs.d * ny;

  const double vt = fs.s_d * one_minus_kd;
  const double vn = fs.d_d;
  const double at = fs.s_dd * one_minus_kd - 2.0 * f.curvature * fs.s_d * fs.d_d;
  const double an = fs.d_dd + f.curvature * one_minus_kd * fs.s_d * fs.s_d;
  const double vx = vt * tx + vn * nx, vy = vt * ty + vn * ny;
  const double ax = at * tx + an * nx, ay = at * ty + an * ny;

  pose.v = std::hypot(vx, vy);
  pose.heading = pose.v > 1e-12 ? std::atan2(vy, vx) : f.heading;
  pose.a = ax * std::cos(pose.heading) + ay * std::sin(pose.heading);
  return pose;
}

double QuinticCoeffs::value(double t) const {
  return c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
}

double QuinticCoeffs::velocity(double t) const {
  return c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
}

double QuinticCoeffs::acceleration(double t) const {
  return 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
}

double QuinticCoeffs::jerk(double t) const {
  return 6.0 * c[3] + t * (24.0 * c[4] + t * 60.0 * c[5]);
}

QuinticCoeffs quintic_coeffs(const BoundaryState& init, const BoundaryState& end,
                             double duration) {
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw Error(ErrorCode::invalid_duration, "quintic duration must be positive");
  }
  // c0..c2 follow from the initial state; the remaining 3x3 block of the
  // boundary system has the closed-form inverse below.
  const double T = duration;
  const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
  const double dp = end.p - (init.p + init.v * T + 0.5 * init.a * T2);
  const double dv = end.v - (init.v + init.a * T);
  const double da = end.a - init.a;

  QuinticCoeffs q;
  q.duration = T;
  q.c[0] = init.p;
  q.c[1] = init.v;
  q.c[2] = 0.5 * init.a;
  q.c[3] = (10.0 * dp - 4.0 * dv * T + 0.5 * da * T2) / T3;
  q.c[4] = (-15.0 * dp + 7.0 * dv * T - da * T2) / T4;
  q.c[5] = (6.0 * dp - 3.0 * dv * T + 0.5 * da * T2) / T5;
  return q;
}

std::size_t horizon_steps(double step, double horizon) {
  if (!(step > 0.0) || !(horizon > 0.0)) {
    throw Error(ErrorCode::invalid_duration, "step and horizon must be positive");
  }
  const double ratio = std::round(horizon / step);
  if (ratio < 1.0 || std::abs(ratio * step - horizon) > 1e-9) {
    throw Error(ErrorCode::non_divisible_step, "step does not divide the horizon");
  }
  return static_cast<std::size_t>(ratio);
}

namespace {

struct PlanCurves {
  QuinticCoeffs lateral;
  QuinticCoeffs longitudinal;
  double goal_time;
  double s_goal;
  double d_goal;
  double s_d_goal;
};

PlanCurves make_curves(const FrenetState& fs, const GoalAction& goal, double step,
                       double max_time_to_goal) {
  if (!(goal.time_to_goal >= step - 1e-12) || !(goal.time_to_goal <= max_time_to_goal + 1e-12)) {
    throw Error(ErrorCode::invalid_duration, "goal time outside [step, max]");
  }
  PlanCurves c;
  c.goal_time = goal.time_to_goal;
  c.s_goal = fs.s + goal.s_advance;
  c.d_goal = goal.d_target;
  c.s_d_goal = goal.s_d_target;
  c.lateral = quintic_coeffs({fs.d, fs.d_d, fs.d_dd}, {goal.d_target, 0.0, 0.0}, c.goal_time);
  c.longitudinal =
      quintic_coeffs({fs.s, fs.s_d, fs.s_dd}, {c.s_goal, goal.s_d_target, 0.0}, c.goal_time);
  return c;
}

FrenetState sample(const PlanCurves& c, double t) {
  FrenetState out;
  if (t <= c.goal_time) {
    out.s = c.longitudinal.value(t);
    out.s_d = c.longitudinal.velocity(t);
    out.s_dd = c.longitudinal.acceleration(t);
    out.d = c.lateral.value(t);
    out.d_d = c.lateral.velocity(t);
    out.d_dd = c.lateral.acceleration(t);
  } else {
    out.s = c.s_goal + c.s_d_goal * (t - c.goal_time);
    out.s_d = c.s_d_goal;
    out.d = c.d_goal;
  }
  return out;
}

}  // namespace

PlannedTrajectory plan_trajectory(const FrenetState& fs, const GoalAction& goal, double step,
                                  double horizon, double max_time_to_goal) {
  const std::size_t n = horizon_steps(step, horizon);
  const PlanCurves curves = make_curves(fs, goal, step, max_time_to_goal);
  PlannedTrajectory traj;
  traj.step = step;
  traj.horizon = horizon;
  traj.source_action = goal;
  traj.states.reserve(n);
  for (std::size_t k = 1; k <= n; ++k) {
    traj.states.push_back(sample(curves, static_cast<double>(k) * step));
  }
  return traj;
}

FrenetState plan_first_state(const FrenetState& fs, const GoalAction& goal, double step,
                             double max_time_to_goal) {
  if (!(step > 0.0)) throw Error(ErrorCode::invalid_duration, "step must be positive");
  return sample(make_curves(fs, goal, step, max_time_to_goal), 1.0 * step);
}

}  // namespace rlplan
