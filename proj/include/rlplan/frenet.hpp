#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace rlplan {

// Road-aligned kinematic state. s is arc length along the reference line,
// d the signed lateral offset (positive to the left of travel direction).
struct FrenetState {
  double s = 0.0;
  double s_d = 0.0;
  double s_dd = 0.0;
  double d = 0.0;
  double d_d = 0.0;
  double d_dd = 0.0;

  bool operator==(const FrenetState&) const = default;
};

/// Goal tuple emitted by the planning agent: reach lateral offset `d_target`
/// and longitudinal advance `s_advance` (relative to the current s) with
/// speed `s_d_target`, `time_to_goal` seconds from now.
struct GoalAction {
  double time_to_goal = 1.0;
  double d_target = 0.0;
  double s_advance = 1.0;
  double s_d_target = 0.0;

  bool operator==(const GoalAction&) const = default;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double v = 0.0;
  double a = 0.0;  // tangential acceleration
};

struct RefPoint {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double curvature = 0.0;
  double s = 0.0;
};

// Local frame of the reference line at an arc length.
struct RefFrame {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double curvature = 0.0;
};

class ReferenceLine {
 public:
  static constexpr double kDefaultSpacing = 0.5;

  /// Resamples a waypoint polyline at uniform arc-length spacing `ds`.
  /// Heading and curvature come from finite differences of the samples.
  static ReferenceLine build(const std::vector<Point2>& waypoints,
                             double ds = kDefaultSpacing);

  const std::vector<RefPoint>& samples() const { return samples_; }
  double spacing() const { return ds_; }
  double length() const { return samples_.back().s; }
  std::size_t size() const { return samples_.size(); }

  // Position is interpolated linearly between samples; heading linearly in
  // angle, so curvature is piecewise constant per segment. Arc lengths outside
  // [0, length] extrapolate the end segments.
  RefFrame frame_at(double s) const;

  // Index of the sample nearest to (x, y). Searches outward from `hint` while
  // the distance keeps decreasing, then falls back to a global scan if the
  // local minimum is not convincing.
  std::size_t nearest_index(double x, double y, std::size_t hint) const;

 private:
  std::size_t segment_for(double s) const;

  std::vector<RefPoint> samples_;
  double ds_ = kDefaultSpacing;
};

/// Reads `x y` pairs, one per line. Blank lines and `#` comments are skipped.
std::vector<Point2> load_waypoints(const std::string& path);

ReferenceLine build_reference_line(const std::vector<Point2>& waypoints,
                                   double ds = ReferenceLine::kDefaultSpacing);

FrenetState cartesian_to_frenet(const ReferenceLine& line, const Pose& pose,
                                double corridor = 20.0,
                                std::optional<std::size_t> hint = std::nullopt);

Pose frenet_to_cartesian(const ReferenceLine& line, const FrenetState& fs);

struct QuinticCoeffs {
  std::array<double, 6> c{};
  double duration = 0.0;

  double value(double t) const;
  double velocity(double t) const;
  double acceleration(double t) const;
  double jerk(double t) const;

  bool operator==(const QuinticCoeffs&) const = default;
};

struct BoundaryState {
  double p = 0.0;
  double v = 0.0;
  double a = 0.0;
};

/// Unique degree-5 polynomial meeting (p, v, a) at t = 0 and t = duration.
QuinticCoeffs quintic_coeffs(const BoundaryState& init, const BoundaryState& end,
                             double duration);

struct PlannedTrajectory {
  double step = 0.0;
  double horizon = 0.0;
  std::vector<FrenetState> states;  // at t + step, t + 2 step, ..., t + horizon
  std::optional<GoalAction> source_action;
};

/// Jerk-optimal lateral and longitudinal quintics toward `goal`, sampled every
/// `step` up to `horizon`. Past the goal time the trajectory holds d_target
/// and cruises at s_d_target.
PlannedTrajectory plan_trajectory(const FrenetState& fs, const GoalAction& goal,
                                  double step, double horizon,
                                  double max_time_to_goal = 4.0);

/// First sample of plan_trajectory(fs, goal, step, ...), computed without
/// materializing the whole horizon. Bitwise equal to states[0].
FrenetState plan_first_state(const FrenetState& fs, const GoalAction& goal, double step,
                             double max_time_to_goal = 4.0);

// round(horizon / step), throwing when step does not divide horizon.
std::size_t horizon_steps(double step, double horizon);

}  // namespace rlplan
