#include "rlplan/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rlplan/error.hpp"

namespace rlplan {

int Road::nearest_lane(double d) const {
  const int lane = static_cast<int>(std::lround((d - first_lane_offset) / lane_width));
  return std::clamp(lane, 0, lane_count - 1);
}

const char* to_string(EpisodeStatus s) {
  switch (s) {
    case EpisodeStatus::running: return "running";
    case EpisodeStatus::success: return "success";
    case EpisodeStatus::collision: return "collision";
    case EpisodeStatus::timeout: return "timeout";
    case EpisodeStatus::off_course: return "off_course";
  }
  return "?";
}

ScenarioSpec scenario_spec(int scenario_id) {
  ScenarioSpec spec;
  spec.id = scenario_id;
  switch (scenario_id) {
    case 1:  // lane following with static obstacles
      spec.min_static = 1;
      spec.max_static = 2;
      break;
    case 2:  // lane following with traffic
      spec.min_dynamic = 1;
      spec.max_dynamic = 5;
      break;
    case 3:  // lane change with traffic
      spec.lane_count = 3;
      spec.first_lane_offset = -3.5;
      spec.start_lane = 1;
      spec.target_lane = 2;
      spec.min_dynamic = 1;
      spec.max_dynamic = 5;
      break;
    case 4:  // overtaking parked cars with traffic
      spec.lane_count = 3;
      spec.first_lane_offset = -3.5;
      spec.start_lane = 1;
      spec.target_lane = 1;
      spec.min_static = 1;
      spec.max_static = 2;
      spec.min_dynamic = 1;
      spec.max_dynamic = 3;
      break;
    default:
      throw Error(ErrorCode::unknown_scenario, "scenario id " + std::to_string(scenario_id));
  }
  return spec;
}

bool same_state(const WorldState& a, const WorldState& b) {
  const bool models_equal =
      a.model == b.model ||
      (a.model && b.model && a.model->target_d == b.model->target_d &&
       a.model->road.lane_count == b.model->road.lane_count &&
       a.model->road.first_lane_offset == b.model->road.first_lane_offset);
  const bool inflation_equal =
      a.inflation.has_value() == b.inflation.has_value() &&
      (!a.inflation || (a.inflation->ego.a == b.inflation->ego.a &&
                        a.inflation->ego.b == b.inflation->ego.b &&
                        a.inflation->other.a == b.inflation->other.a &&
                        a.inflation->other.b == b.inflation->other.b));
  return models_equal && inflation_equal && a.tick == b.tick && a.time == b.time &&
         a.av == b.av && a.participants == b.participants && a.goal_s == b.goal_s &&
         a.collided == b.collided && a.behavior_rng == b.behavior_rng &&
         a.tracking_rng == b.tracking_rng;
}

double heading_from_velocity(const FrenetState& fs, double fallback) {
  if (std::hypot(fs.s_d, fs.d_d) < 0.1) return fallback;
  const double h = std::atan2(fs.d_d, fs.s_d);
  // Keep strictly inside (-pi, pi).
  return std::clamp(h, -std::numbers::pi + 1e-9, std::numbers::pi - 1e-9);
}

namespace {

bool overlaps_laterally(double d_a, double w_a, double d_b, double w_b) {
  return std::abs(d_a - d_b) < 0.5 * (w_a + w_b) + 0.3;
}

// Nearest participant ahead sharing lateral space with `self`.
const VehicleState* find_leader(const VehicleState& self, const std::vector<VehicleState>& all) {
  const VehicleState* leader = nullptr;
  for (const VehicleState& other : all) {
    if (other.id == self.id || other.frenet.s <= self.frenet.s) continue;
    if (!overlaps_laterally(self.frenet.d, self.width, other.frenet.d, other.width)) continue;
    if (!leader || other.frenet.s < leader->frenet.s) leader = &other;
  }
  return leader;
}

double idm_accel(const IdmParams& p, double speed, double desired, const VehicleState& self,
                 const VehicleState* leader) {
  double accel = p.max_accel * (1.0 - std::pow(speed / std::max(desired, 0.1), p.exponent));
  if (leader) {
    const double gap = std::max(
        leader->frenet.s - self.frenet.s - 0.5 * (leader->length + self.length), 0.1);
    const double closing = speed - leader->frenet.s_d;
    const double desired_gap =
        p.min_gap + std::max(0.0, speed * p.time_headway +
                                      speed * closing / (2.0 * std::sqrt(p.max_accel * p.comfort_decel)));
    accel -= p.max_accel * (desired_gap / gap) * (desired_gap / gap);
  }
  return accel;
}

bool lane_gap_free(const VehicleState& self, double target_d,
                   const std::vector<VehicleState>& participants, const VehicleState& av) {
  auto blocks = [&](const VehicleState& other) {
    if (other.id == self.id) return false;
    const double ds = other.frenet.s - self.frenet.s;
    return ds > -12.0 && ds < 18.0 &&
           overlaps_laterally(target_d, self.width, other.frenet.d, other.width);
  };
  if (blocks(av)) return false;
  return std::none_of(participants.begin(), participants.end(), blocks);
}

// Advances all dynamic participants one tick. New lane changes are drawn from
// `rng` when given; without it only committed maneuvers continue.
void advance_participants(const WorldModel& model, std::vector<VehicleState>& participants,
                          const VehicleState& av, double step, Rng* rng) {
  const WorldConfig& cfg = model.config;
  const std::vector<VehicleState> before = participants;
  const double trigger_p = 1.0 - std::exp(-cfg.lane_change_rate * step);
  const int maneuver_steps =
      std::max(1, static_cast<int>(std::lround(cfg.lane_change_duration / step)));

  for (std::size_t i = 0; i < participants.size(); ++i) {
    VehicleState& v = participants[i];
    if (v.is_static) continue;
    const VehicleState& old = before[i];

    const double desired = std::min(v.desired_speed, model.road.speed_limit);
    const double speed = old.frenet.s_d;
    const double accel = idm_accel(cfg.idm, speed, desired, old, find_leader(old, before));
    const double new_speed = std::clamp(speed + accel * step, 0.0, model.road.speed_limit);
    v.frenet.s = old.frenet.s + 0.5 * (speed + new_speed) * step;
    v.frenet.s_d = new_speed;
    v.frenet.s_dd = (new_speed - speed) / step;

    if (rng && cfg.lane_change_rate > 0.0) {
      const double u = uniform(*rng, 0.0, 1.0);
      if (!v.maneuver && u < trigger_p) {
        const int dir = uniform(*rng, 0.0, 1.0) < 0.5 ? -1 : 1;
        int target = v.lane_index + dir;
        if (target < 0 || target >= model.road.lane_count) target = v.lane_index - dir;
        if (target >= 0 && target < model.road.lane_count && target != v.lane_index &&
            lane_gap_free(old, model.road.lane_center(target), before, av)) {
          LaneChange lc;
          lc.lateral = quintic_coeffs({old.frenet.d, old.frenet.d_d, old.frenet.d_dd},
                                      {model.road.lane_center(target), 0.0, 0.0},
                                      maneuver_steps * step);
          lc.target_lane = target;
          v.maneuver = lc;
        }
      }
    }

    if (v.maneuver) {
      LaneChange& lc = *v.maneuver;
      ++lc.steps_elapsed;
      if (lc.steps_elapsed >= maneuver_steps) {
        v.frenet.d = model.road.lane_center(lc.target_lane);
        v.frenet.d_d = 0.0;
        v.frenet.d_dd = 0.0;
        v.lane_index = lc.target_lane;
        v.maneuver.reset();
      } else {
        const double t = lc.steps_elapsed * step;
        v.frenet.d = lc.lateral.value(t);
        v.frenet.d_d = lc.lateral.velocity(t);
        v.frenet.d_dd = lc.lateral.acceleration(t);
      }
    }
    v.heading = heading_from_velocity(v.frenet, old.heading);
  }
}

void apply_tracking_noise(const WorldConfig& cfg, FrenetState& fs, Rng& rng) {
  fs.s += gaussian(rng, cfg.tracking_sigma_pos);
  fs.d += gaussian(rng, cfg.tracking_sigma_pos);
  fs.s_d += gaussian(rng, cfg.tracking_sigma_speed);
  fs.d_d += gaussian(rng, cfg.tracking_sigma_speed);
}

VehicleState make_vehicle(int id, double s, double d, double heading, double speed,
                          const ScenarioSpec& spec) {
  VehicleState v;
  v.id = id;
  v.frenet.s = s;
  v.frenet.d = d;
  v.frenet.s_d = speed * std::cos(heading);
  v.frenet.d_d = speed * std::sin(heading);
  v.heading = heading;
  v.length = spec.vehicle_length;
  v.width = spec.vehicle_width;
  return v;
}

WorldState finish_tick(WorldState next, const WorldState& prev) {
  next.tick = prev.tick + 1;
  next.time = static_cast<double>(next.tick) * prev.model->config.step;
  next.collided = prev.collided || av_collides(next.av, next.participants);
  return next;
}

}  // namespace

WorldState spawn_scenario(const ScenarioSpec& spec, std::uint64_t seed, const WorldConfig& config) {
  if (spec.id < 1 || spec.id > 4) {
    throw Error(ErrorCode::unknown_scenario, "scenario id " + std::to_string(spec.id));
  }
  Rng spawn(substream_seed(seed, "spawn"));

  auto model = std::make_shared<WorldModel>();
  model->config = config;
  model->road.line = std::make_shared<const ReferenceLine>(
      ReferenceLine::build({{0.0, 0.0}, {config.road_length, 0.0}}));
  model->road.lane_count = spec.lane_count;
  model->road.lane_width = config.lane_width;
  model->road.first_lane_offset = spec.first_lane_offset;
  model->road.speed_limit = config.speed_limit;
  model->target_d = model->road.lane_center(spec.target_lane);
  model->corridor_margin = spec.max_lateral_dev;

  WorldState w;
  w.spec = spec;
  w.behavior_rng = Rng(substream_seed(seed, "behavior"));
  w.tracking_rng = Rng(substream_seed(seed, "tracking"));

  const double av_s = 50.0;
  const double av_d = model->road.lane_center(spec.start_lane) +
                      uniform(spawn, -spec.av_lateral_dev, spec.av_lateral_dev);
  const double av_heading = uniform(spawn, -spec.av_heading_dev, spec.av_heading_dev);
  const double av_speed = uniform(spawn, spec.av_speed_min, spec.av_speed_max);
  w.av = make_vehicle(0, av_s, av_d, av_heading, av_speed, spec);
  w.av.length = config.av_length;
  w.av.width = config.av_width;
  w.av.lane_index = spec.start_lane;
  w.goal_s = av_s + spec.goal_distance;

  int next_id = 1;
  auto too_close = [&](double s, double d, double min_ds) {
    auto near = [&](const VehicleState& v) {
      return std::abs(v.frenet.s - s) < min_ds && overlaps_laterally(v.frenet.d, v.width, d, spec.vehicle_width);
    };
    return near(w.av) || std::any_of(w.participants.begin(), w.participants.end(), near);
  };

  const int n_static = spec.max_static > 0 ? uniform_int(spawn, spec.min_static, spec.max_static) : 0;
  for (int i = 0; i < n_static; ++i) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double s = av_s + uniform(spawn, spec.obstacle_ahead_min, spec.obstacle_ahead_max);
      const double d = model->road.lane_center(spec.start_lane) +
                       uniform(spawn, -spec.obstacle_lateral_dev, spec.obstacle_lateral_dev);
      const double heading = uniform(spawn, -spec.obstacle_heading_dev, spec.obstacle_heading_dev);
      if (too_close(s, d, 20.0)) continue;
      VehicleState v = make_vehicle(next_id++, s, d, heading, 0.0, spec);
      v.is_static = true;
      v.lane_index = spec.start_lane;
      w.participants.push_back(v);
      break;
    }
  }

  const int n_dynamic =
      spec.max_dynamic > 0 ? uniform_int(spawn, spec.min_dynamic, spec.max_dynamic) : 0;
  for (int i = 0; i < n_dynamic; ++i) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const int lane = uniform_int(spawn, 0, spec.lane_count - 1);
      const double s = av_s + uniform(spawn, spec.participant_ahead_min, spec.participant_ahead_max);
      const double speed =
          config.speed_limit * uniform(spawn, spec.participant_speed_min, spec.participant_speed_max);
      const double d = model->road.lane_center(lane);
      if (too_close(s, d, 15.0)) continue;
      VehicleState v = make_vehicle(next_id++, s, d, 0.0, speed, spec);
      v.lane_index = lane;
      v.desired_speed = speed;
      w.participants.push_back(v);
      break;
    }
  }

  w.model = std::move(model);
  return w;
}

WorldState step_participants(const WorldState& world, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::precondition, "step must be positive");
  WorldState next = world;
  advance_participants(*world.model, next.participants, world.av, step, &next.behavior_rng);
  return next;
}

std::vector<PlannedTrajectory> predict_participants(const WorldState& world, double horizon,
                                                    double step) {
  const std::size_t n = horizon_steps(step, horizon);
  std::vector<PlannedTrajectory> out(world.participants.size());
  for (auto& traj : out) {
    traj.step = step;
    traj.horizon = horizon;
    traj.states.reserve(n);
  }
  std::vector<VehicleState> rollout = world.participants;
  for (std::size_t k = 0; k < n; ++k) {
    advance_participants(*world.model, rollout, world.av, step, nullptr);
    for (std::size_t i = 0; i < rollout.size(); ++i) out[i].states.push_back(rollout[i].frenet);
  }
  return out;
}

WorldState step_av(const WorldState& world, const PlannedTrajectory& traj, double step) {
  if (traj.states.empty()) throw Error(ErrorCode::precondition, "empty trajectory");
  (void)step;
  WorldState next = world;
  next.av.frenet = traj.states.front();
  apply_tracking_noise(world.model->config, next.av.frenet, next.tracking_rng);
  next.av.heading = heading_from_velocity(next.av.frenet, world.av.heading);
  next.av.lane_index = world.model->road.nearest_lane(next.av.frenet.d);
  return next;
}

WorldState step_av_control(const WorldState& world, const ControlAction& control, double step) {
  const WorldConfig& cfg = world.model->config;
  WorldState next = world;
  const FrenetState& f = world.av.frenet;
  const double heading = world.av.heading;
  const double speed = std::max(std::hypot(f.s_d, f.d_d), 0.0);
  const double new_speed = std::clamp(speed + control.accel * step, 0.0, 1.5 * cfg.speed_limit);
  const double yaw_rate = speed * std::tan(control.steer) / cfg.wheelbase;
  double new_heading = heading + yaw_rate * step;
  new_heading = std::clamp(new_heading, -std::numbers::pi + 1e-9, std::numbers::pi - 1e-9);
  const double tangential = (new_speed - speed) / step;

  FrenetState g;
  g.s = f.s + speed * std::cos(heading) * step;
  g.d = f.d + speed * std::sin(heading) * step;
  g.s_d = new_speed * std::cos(new_heading);
  g.d_d = new_speed * std::sin(new_heading);
  g.s_dd = tangential * std::cos(new_heading) - new_speed * yaw_rate * std::sin(new_heading);
  g.d_dd = tangential * std::sin(new_heading) + new_speed * yaw_rate * std::cos(new_heading);

  g.s += gaussian(next.tracking_rng, cfg.tracking_sigma_pos);
  g.d += gaussian(next.tracking_rng, cfg.tracking_sigma_pos);
  const double noisy_speed = new_speed + gaussian(next.tracking_rng, cfg.tracking_sigma_speed);
  g.s_d = noisy_speed * std::cos(new_heading);
  g.d_d = noisy_speed * std::sin(new_heading);

  next.av.frenet = g;
  next.av.heading = new_heading;
  next.av.lane_index = world.model->road.nearest_lane(g.d);
  return next;
}

WorldState step_world(const WorldState& world, const PlannedTrajectory& traj) {
  const double step = world.model->config.step;
  WorldState next = step_av(world, traj, step);
  advance_participants(*world.model, next.participants, world.av, step, &next.behavior_rng);
  return finish_tick(std::move(next), world);
}

WorldState step_world(const WorldState& world, const ControlAction& control) {
  const double step = world.model->config.step;
  WorldState next = step_av_control(world, control, step);
  advance_participants(*world.model, next.participants, world.av, step, &next.behavior_rng);
  return finish_tick(std::move(next), world);
}

bool off_road(const WorldModel& model, const FrenetState& fs) {
  const Road& road = model.road;
  return fs.d < road.lane_center(0) - model.corridor_margin ||
         fs.d > road.lane_center(road.lane_count - 1) + model.corridor_margin;
}

bool check_collision(const VehicleState& a, const VehicleState& b) {
  return rects_overlap(a.footprint(), b.footprint());
}

bool av_collides(const VehicleState& av, std::span<const VehicleState> participants) {
  // Cheap bounding-circle rejection before the exact test.
  const double r_av = 0.5 * std::hypot(av.length, av.width);
  for (const VehicleState& p : participants) {
    const double r = r_av + 0.5 * std::hypot(p.length, p.width);
    const double ds = p.frenet.s - av.frenet.s, dd = p.frenet.d - av.frenet.d;
    if (ds * ds + dd * dd > r * r) continue;
    if (check_collision(av, p)) return true;
  }
  return false;
}

RewardBreakdown reward_terms(const WorldModel& model, const FrenetState& prev,
                             const FrenetState& next, bool collided) {
  const WorldConfig& cfg = model.config;
  const RewardWeights& w = cfg.reward;
  RewardBreakdown r;
  r.lat_acc = w.lat_acc * std::abs(next.d_dd);
  r.lat_jerk = w.lat_jerk * std::abs(next.d_dd - prev.d_dd) / cfg.step;
  r.long_acc = w.long_acc * std::abs(next.s_dd);
  r.long_jerk = w.long_jerk * std::abs(next.s_dd - prev.s_dd) / cfg.step;
  r.lateral_dev = w.lateral_dev * std::abs(next.d - model.target_d);
  // signed so that reversing counts as slower than standing still
  const double speed = std::copysign(std::hypot(next.s_d, next.d_d), next.s_d);
  r.speed_dev = w.speed_dev * std::abs(speed - cfg.desired_speed);
  r.collision = collided ? w.collision_hit : w.collision_free;
  r.total = r.lat_acc + r.lat_jerk + r.long_acc + r.long_jerk + r.lateral_dev + r.speed_dev +
            r.collision;
  return r;
}

RewardBreakdown compute_reward(const WorldState& s, const WorldState& s_next) {
  const double step = s.model->config.step;
  if (std::abs(s_next.time - (s.time + step)) > 1e-9) {
    throw Error(ErrorCode::time_mismatch, "transition must span exactly one step");
  }
  const WorldModel& model = *s.model;
  const bool departed = model.config.road_departure_collides && off_road(model, s_next.av.frenet);
  return reward_terms(model, s.av.frenet, s_next.av.frenet,
                      departed || av_collides(s_next.av, s_next.participants));
}

Observation assemble_observation(const WorldModel& model, const VehicleState& av,
                                 std::span<const VehicleState> participants,
                                 const FootprintInflation* inflation) {
  const WorldConfig& cfg = model.config;
  const double v_scale = model.road.speed_limit;
  const double lane = model.road.lane_width;

  Observation obs;
  obs.features.assign(static_cast<std::size_t>(observation_size(cfg.n_max)), 0.0);
  double* out = obs.features.data();

  double av_len = av.length, av_wid = av.width;
  if (inflation) {
    const InflatedExtent e = inflated_extent(av.footprint(), inflation->ego);
    av_len = e.length;
    av_wid = e.width;
  }
  const FrenetState& f = av.frenet;
  out[0] = (f.d - model.target_d) / lane;
  out[1] = f.d_d / 2.0;
  out[2] = f.d_dd / 2.0;
  out[3] = f.s_d / v_scale;
  out[4] = f.s_dd / 3.0;
  out[5] = av.heading / 0.5;
  out[6] = model.road.speed_limit / 20.0;
  out[7] = av_len / 5.0;
  out[8] = av_wid / 2.0;

  // Nearest first by |s_rel|; ties broken by id so the order is total.
  std::vector<const VehicleState*> order;
  order.reserve(participants.size());
  for (const VehicleState& p : participants) order.push_back(&p);
  std::sort(order.begin(), order.end(), [&](const VehicleState* a, const VehicleState* b) {
    const double ra = std::abs(a->frenet.s - f.s), rb = std::abs(b->frenet.s - f.s);
    if (ra != rb) return ra < rb;
    return a->id < b->id;
  });

  const std::size_t shown = std::min<std::size_t>(order.size(), static_cast<std::size_t>(cfg.n_max));
  for (std::size_t k = 0; k < shown; ++k) {
    const VehicleState& p = *order[k];
    double len = p.length, wid = p.width;
    if (inflation) {
      const InflatedExtent e = inflated_extent(p.footprint(), inflation->other);
      len = e.length;
      wid = e.width;
    }
    double* b = out + kAvFeatures + kParticipantFeatures * k;
    b[0] = (p.frenet.s - f.s) / 50.0;
    b[1] = (p.frenet.d - model.target_d) / lane;
    b[2] = p.heading / 0.5;
    b[3] = len / 5.0;
    b[4] = wid / 2.0;
    b[5] = p.frenet.s_d / v_scale;
    b[6] = p.frenet.d_d / 2.0;
    b[7] = 1.0;
  }
  return obs;
}

Observation observe(const WorldState& world) {
  return assemble_observation(*world.model, world.av, world.participants,
                              world.inflation ? &*world.inflation : nullptr);
}

EpisodeStatus episode_status(const WorldState& world) {
  const double d = world.av.frenet.d;
  if (world.collided) return EpisodeStatus::collision;
  if (world.av.frenet.s >= world.goal_s) {
    return std::abs(d - world.model->target_d) <= world.spec.max_lateral_dev
               ? EpisodeStatus::success
               : EpisodeStatus::off_course;
  }
  if (off_road(*world.model, world.av.frenet)) return EpisodeStatus::off_course;
  if (world.time > world.spec.time_limit + 1e-9) return EpisodeStatus::timeout;
  return EpisodeStatus::running;
}

}  // namespace rlplan
