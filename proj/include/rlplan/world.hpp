#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rlplan/frenet.hpp"
#include "rlplan/geometry.hpp"
#include "rlplan/rng.hpp"
#include "rlplan/uncertainty.hpp"

namespace rlplan {

struct RewardWeights {
  double lat_acc = -0.05;     // s^2/m
  double lat_jerk = -0.01;    // s^3/m
  double long_acc = -0.05;    // s^2/m
  double long_jerk = -0.01;   // s^3/m
  double lateral_dev = -0.1;  // 1/m
  double speed_dev = -0.05;   // s/m
  double collision_hit = -10.0;
  double collision_free = 0.1;
};

struct IdmParams {
  double max_accel = 1.5;      // m/s^2
  double comfort_decel = 2.0;  // m/s^2
  double min_gap = 2.0;        // m
  double time_headway = 1.5;   // s
  double exponent = 4.0;
};

struct WorldConfig {
  double step = 0.1;     // simulator tick and prediction step, s
  double horizon = 3.0;  // planning / prediction horizon, s
  double lane_width = 3.5;
  double speed_limit = 50.0 / 3.6;
  double desired_speed = 50.0 / 3.6;
  int n_max = 5;
  double max_time_to_goal = 4.0;
  RewardWeights reward;
  double tracking_sigma_pos = 0.05;    // m
  double tracking_sigma_speed = 0.1;   // m/s
  double lane_change_rate = 0.03;      // 1/s, per dynamic participant
  double lane_change_duration = 4.0;   // s
  IdmParams idm;
  double av_length = 4.5;
  double av_width = 1.8;
  double road_length = 1000.0;
  double wheelbase = 2.7;  // kinematic bicycle for control-command agents
  // Leaving the drivable corridor earns the collision reward (the episode
  // still ends as off_course, not as a collision).
  bool road_departure_collides = true;
};

struct Road {
  std::shared_ptr<const ReferenceLine> line;
  int lane_count = 2;
  double lane_width = 3.5;
  double first_lane_offset = 0.0;  // d of lane 0's center
  double speed_limit = 50.0 / 3.6;

  double lane_center(int lane) const { return first_lane_offset + lane * lane_width; }
  int nearest_lane(double d) const;
};

// Per-episode constants shared by every state of an episode, and by the
// prediction contexts captured from it.
struct WorldModel {
  Road road;
  WorldConfig config;
  double target_d = 0.0;  // center of the target lane
  double corridor_margin = 1.5;  // allowed offset beyond the outer lane centers
};

struct ScenarioSpec {
  int id = 1;
  int min_static = 0;
  int max_static = 0;
  int min_dynamic = 0;
  int max_dynamic = 0;
  int lane_count = 2;
  double first_lane_offset = 0.0;
  int start_lane = 0;
  int target_lane = 0;
  double av_lateral_dev = 1.5;                 // m
  double av_heading_dev = 20.0 * 0.017453292519943295;  // rad
  double av_speed_min = 5.0 / 3.6;              // m/s
  double av_speed_max = 15.0 / 3.6;
  double obstacle_lateral_dev = 0.5;
  double obstacle_heading_dev = 20.0 * 0.017453292519943295;
  double obstacle_ahead_min = 30.0;
  double obstacle_ahead_max = 100.0;
  double participant_ahead_min = 15.0;
  double participant_ahead_max = 110.0;
  double participant_speed_min = 0.55;  // fraction of the speed limit
  double participant_speed_max = 0.9;
  double goal_distance = 130.0;
  double max_lateral_dev = 1.5;
  double time_limit = 60.0;
  double vehicle_length = 4.5;
  double vehicle_width = 1.8;
};

// Defaults for the four scenarios; throws unknown_scenario otherwise.
ScenarioSpec scenario_spec(int scenario_id);

struct LaneChange {
  QuinticCoeffs lateral;
  int steps_elapsed = 0;
  int target_lane = 0;

  bool operator==(const LaneChange&) const = default;
};

struct VehicleState {
  int id = 0;
  FrenetState frenet;
  double heading = 0.0;  // relative to the road tangent
  double length = 4.5;
  double width = 1.8;
  int lane_index = 0;
  bool is_static = false;
  double desired_speed = 0.0;
  std::optional<LaneChange> maneuver;

  OrientedRect footprint() const {
    return {frenet.s, frenet.d, heading, length, width};
  }
  bool operator==(const VehicleState&) const = default;
};

// Ellipses used to inflate footprints in observations.
struct FootprintInflation {
  Ellipse ego;
  Ellipse other;
};

struct WorldState {
  std::int64_t tick = 0;
  double time = 0.0;
  VehicleState av;
  std::vector<VehicleState> participants;
  std::shared_ptr<const WorldModel> model;
  ScenarioSpec spec;
  double goal_s = 0.0;
  bool collided = false;
  std::optional<FootprintInflation> inflation;
  Rng behavior_rng;
  Rng tracking_rng;
};

bool same_state(const WorldState& a, const WorldState& b);

struct ControlAction {
  double steer = 0.0;  // rad
  double accel = 0.0;  // m/s^2
};

struct Observation {
  std::vector<double> features;
};

inline constexpr int kAvFeatures = 9;
inline constexpr int kParticipantFeatures = 8;
inline int observation_size(int n_max) { return kAvFeatures + kParticipantFeatures * n_max; }

struct RewardBreakdown {
  double lat_acc = 0.0;
  double lat_jerk = 0.0;
  double long_acc = 0.0;
  double long_jerk = 0.0;
  double lateral_dev = 0.0;
  double speed_dev = 0.0;
  double collision = 0.0;
  double total = 0.0;
};

enum class EpisodeStatus { running, success, collision, timeout, off_course };
const char* to_string(EpisodeStatus s);

/// Deterministic episode start: same (spec, config, seed) gives the same
/// state, random streams included.
WorldState spawn_scenario(const ScenarioSpec& spec, std::uint64_t seed,
                          const WorldConfig& config = {});

/// Dynamic participants advance by IDM car following among participants and
/// start Poisson-triggered quintic lane changes drawn from behavior_rng.
/// Static participants and the ego vehicle are untouched; time is not advanced.
WorldState step_participants(const WorldState& world, double step);

/// Rolls the participant behavior model forward with no new lane changes.
/// Maneuvers already underway continue along their committed quintic.
std::vector<PlannedTrajectory> predict_participants(const WorldState& world, double horizon,
                                                    double step);

/// Ego vehicle lands on traj.states[0] plus Gaussian tracking noise.
WorldState step_av(const WorldState& world, const PlannedTrajectory& traj, double step);

/// Kinematic bicycle step driven by a control command, same tracking noise.
WorldState step_av_control(const WorldState& world, const ControlAction& control, double step);

// Full tick: ego, participants, clock, collision flag.
WorldState step_world(const WorldState& world, const PlannedTrajectory& traj);
WorldState step_world(const WorldState& world, const ControlAction& control);

bool check_collision(const VehicleState& a, const VehicleState& b);
bool off_road(const WorldModel& model, const FrenetState& fs);
bool av_collides(const VehicleState& av, std::span<const VehicleState> participants);

/// Weighted reward terms for one ego transition.
RewardBreakdown reward_terms(const WorldModel& model, const FrenetState& prev,
                             const FrenetState& next, bool collided);

RewardBreakdown compute_reward(const WorldState& s, const WorldState& s_next);

/// Observation assembly shared by the simulator and predicted rollouts.
/// Participants are ordered by |s_rel| and padded to n_max; with `inflation`
/// the reported footprints are the inflated extents.
Observation assemble_observation(const WorldModel& model, const VehicleState& av,
                                 std::span<const VehicleState> participants,
                                 const FootprintInflation* inflation);

Observation observe(const WorldState& world);

EpisodeStatus episode_status(const WorldState& world);

// Heading relative to the road implied by Frenet velocities; keeps `fallback`
// when nearly stopped.
double heading_from_velocity(const FrenetState& fs, double fallback);

}  // namespace rlplan
