#include "rlplan/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "rlplan/error.hpp"

namespace rlplan {

const char* to_string(Method m) {
  switch (m) {
    case Method::baseline1: return "baseline1";
    case Method::baseline2: return "baseline2";
    case Method::rp: return "rp";
    case Method::irp: return "irp";
    case Method::irp_up: return "irp_up";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "baseline1") return Method::baseline1;
  if (name == "baseline2") return Method::baseline2;
  if (name == "rp") return Method::rp;
  if (name == "irp") return Method::irp;
  if (name == "irp_up") return Method::irp_up;
  throw Error(ErrorCode::invalid_config, "unknown method '" + name + "'");
}

TargetStrategy strategy_for(Method m) {
  switch (m) {
    case Method::rp: return TargetStrategy::rp;
    case Method::irp: return TargetStrategy::irp;
    case Method::irp_up: return TargetStrategy::irp_up;
    default: return TargetStrategy::td1;
  }
}

bool uses_goal_actions(Method m) { return m != Method::baseline1; }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::invalid_config, "bad value '" + value + "' for " + key);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v);
  return out;
}

long long parse_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

std::string fmt(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

template <class Owner>
struct Entry {
  std::string key;
  std::function<std::string(Owner&)> get;
  std::function<void(Owner&, const std::string&)> set;
};

template <class Owner, class Access>
Entry<Owner> bind(std::string key, Access access) {
  using T = std::remove_reference_t<decltype(access(std::declval<Owner&>()))>;
  Entry<Owner> e;
  e.key = key;
  e.get = [access](Owner& o) -> std::string {
    const T& v = access(o);
    if constexpr (std::is_same_v<T, double>) {
      return fmt(v);
    } else if constexpr (std::is_same_v<T, bool>) {
      return v ? "true" : "false";
    } else if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      return fmt_list(v);
    } else if constexpr (std::is_same_v<T, std::vector<int>>) {
      std::string out;
      for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
      return out;
    } else {
      return std::to_string(v);
    }
  };
  e.set = [access, key](Owner& o, const std::string& s) {
    T& v = access(o);
    if constexpr (std::is_same_v<T, double>) {
      v = parse_double(key, s);
    } else if constexpr (std::is_same_v<T, bool>) {
      if (s == "true" || s == "1") v = true;
      else if (s == "false" || s == "0") v = false;
      else bad_value(key, s);
    } else if constexpr (std::is_same_v<T, std::string>) {
      v = s;
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      v = parse_list(key, s);
    } else if constexpr (std::is_same_v<T, std::vector<int>>) {
      v.clear();
      for (double x : parse_list(key, s)) {
        if (x != std::floor(x)) bad_value(key, s);
        v.push_back(static_cast<int>(x));
      }
    } else {
      const long long x = parse_integer(key, s);
      if constexpr (std::is_unsigned_v<T>) {
        if (x < 0) bad_value(key, s);
      }
      v = static_cast<T>(x);
    }
  };
  return e;
}

#define RUN_KEY(name, expr) bind<RunConfig>(name, [](RunConfig& c) -> auto& { return expr; })
#define SCN_KEY(name, field) \
  bind<ScenarioSpec>("scenario." name, [](ScenarioSpec& s) -> auto& { return s.field; })

const std::vector<Entry<RunConfig>>& run_entries() {
  static const std::vector<Entry<RunConfig>> entries = {
      RUN_KEY("scenario", c.scenario_id),
      RUN_KEY("seed", c.seed),
      RUN_KEY("total_env_steps", c.total_env_steps),
      RUN_KEY("eval_every", c.eval_every),
      RUN_KEY("eval_episodes", c.eval_episodes),
      RUN_KEY("out_dir", c.out_dir),
      RUN_KEY("write_trace", c.write_trace),

      RUN_KEY("agent.gamma", c.agent.gamma),
      RUN_KEY("agent.lr_actor", c.agent.lr_actor),
      RUN_KEY("agent.lr_critic", c.agent.lr_critic),
      RUN_KEY("agent.replay_capacity", c.agent.replay_capacity),
      RUN_KEY("agent.batch_size", c.agent.batch_size),
      RUN_KEY("agent.polyak", c.agent.polyak),
      RUN_KEY("agent.noise_start", c.agent.noise_start),
      RUN_KEY("agent.noise_end", c.agent.noise_end),
      RUN_KEY("agent.noise_correlation", c.agent.noise_correlation),
      RUN_KEY("agent.warmup_steps", c.agent.warmup_steps),
      RUN_KEY("agent.update_every", c.agent.update_every),
      RUN_KEY("agent.hidden", c.agent.hidden),

      RUN_KEY("target.confidence", c.confidence),
      RUN_KEY("target.arc_samples", c.arc_samples),

      RUN_KEY("noise.ego_std", c.noise.ego_std),
      RUN_KEY("noise.other_std", c.noise.other_std),
      RUN_KEY("noise.ego_initial_std", c.noise.ego_initial_std),
      RUN_KEY("noise.other_initial_std", c.noise.other_initial_std),

      RUN_KEY("world.step", c.world.step),
      RUN_KEY("world.horizon", c.world.horizon),
      RUN_KEY("world.lane_width", c.world.lane_width),
      RUN_KEY("world.speed_limit", c.world.speed_limit),
      RUN_KEY("world.desired_speed", c.world.desired_speed),
      RUN_KEY("world.n_max", c.world.n_max),
      RUN_KEY("world.max_time_to_goal", c.world.max_time_to_goal),
      RUN_KEY("world.tracking_sigma_pos", c.world.tracking_sigma_pos),
      RUN_KEY("world.tracking_sigma_speed", c.world.tracking_sigma_speed),
      RUN_KEY("world.lane_change_rate", c.world.lane_change_rate),
      RUN_KEY("world.lane_change_duration", c.world.lane_change_duration),
      RUN_KEY("world.av_length", c.world.av_length),
      RUN_KEY("world.av_width", c.world.av_width),
      RUN_KEY("world.road_length", c.world.road_length),
      RUN_KEY("world.wheelbase", c.world.wheelbase),
      RUN_KEY("world.road_departure_collides", c.world.road_departure_collides),

      RUN_KEY("idm.max_accel", c.world.idm.max_accel),
      RUN_KEY("idm.comfort_decel", c.world.idm.comfort_decel),
      RUN_KEY("idm.min_gap", c.world.idm.min_gap),
      RUN_KEY("idm.time_headway", c.world.idm.time_headway),
      RUN_KEY("idm.exponent", c.world.idm.exponent),

      RUN_KEY("reward.lat_acc", c.world.reward.lat_acc),
      RUN_KEY("reward.lat_jerk", c.world.reward.lat_jerk),
      RUN_KEY("reward.long_acc", c.world.reward.long_acc),
      RUN_KEY("reward.long_jerk", c.world.reward.long_jerk),
      RUN_KEY("reward.lateral_dev", c.world.reward.lateral_dev),
      RUN_KEY("reward.speed_dev", c.world.reward.speed_dev),
      RUN_KEY("reward.collision_hit", c.world.reward.collision_hit),
      RUN_KEY("reward.collision_free", c.world.reward.collision_free),
  };
  return entries;
}

const std::vector<Entry<ScenarioSpec>>& scenario_entries() {
  static const std::vector<Entry<ScenarioSpec>> entries = {
      SCN_KEY("min_static", min_static),
      SCN_KEY("max_static", max_static),
      SCN_KEY("min_dynamic", min_dynamic),
      SCN_KEY("max_dynamic", max_dynamic),
      SCN_KEY("lane_count", lane_count),
      SCN_KEY("first_lane_offset", first_lane_offset),
      SCN_KEY("start_lane", start_lane),
      SCN_KEY("target_lane", target_lane),
      SCN_KEY("av_lateral_dev", av_lateral_dev),
      SCN_KEY("av_heading_dev", av_heading_dev),
      SCN_KEY("av_speed_min", av_speed_min),
      SCN_KEY("av_speed_max", av_speed_max),
      SCN_KEY("obstacle_lateral_dev", obstacle_lateral_dev),
      SCN_KEY("obstacle_heading_dev", obstacle_heading_dev),
      SCN_KEY("obstacle_ahead_min", obstacle_ahead_min),
      SCN_KEY("obstacle_ahead_max", obstacle_ahead_max),
      SCN_KEY("participant_ahead_min", participant_ahead_min),
      SCN_KEY("participant_ahead_max", participant_ahead_max),
      SCN_KEY("participant_speed_min", participant_speed_min),
      SCN_KEY("participant_speed_max", participant_speed_max),
      SCN_KEY("goal_distance", goal_distance),
      SCN_KEY("max_lateral_dev", max_lateral_dev),
      SCN_KEY("time_limit", time_limit),
      SCN_KEY("vehicle_length", vehicle_length),
      SCN_KEY("vehicle_width", vehicle_width),
  };
  return entries;
}

#undef RUN_KEY
#undef SCN_KEY

Eigen::Vector4d squared(const std::vector<double>& std4, const char* what) {
  if (std4.size() != 4) {
    throw Error(ErrorCode::invalid_config, std::string(what) + " needs 4 comma-separated values");
  }
  Eigen::Vector4d v;
  for (int i = 0; i < 4; ++i) {
    if (std4[i] < 0.0) throw Error(ErrorCode::invalid_config, std::string(what) + " must be >= 0");
    v(i) = std4[i] * std4[i];
  }
  return v;
}

}  // namespace

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "method") {
    cfg.method = parse_method(value);
    return;
  }
  if (key.rfind("scenario.", 0) == 0) {
    for (const auto& e : scenario_entries()) {
      if (e.key == key) {
        ScenarioSpec probe;
        e.set(probe, value);  // validates the value now
        cfg.scenario_overrides.emplace_back(key, value);
        return;
      }
    }
  }
  for (const auto& e : run_entries()) {
    if (e.key == key) {
      e.set(cfg, value);
      return;
    }
  }
  throw Error(ErrorCode::invalid_config, "unknown key '" + key + "'");
}

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::invalid_config,
                  origin + ":" + std::to_string(number) + ": expected key = value");
    }
    try {
      apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(e.code(), origin + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str(), path);
}

std::string dump_config(const RunConfig& cfg) {
  RunConfig copy = cfg;
  std::string out = "method = " + std::string(to_string(cfg.method)) + "\n";
  for (const auto& e : run_entries()) out += e.key + " = " + e.get(copy) + "\n";
  for (const auto& [k, v] : cfg.scenario_overrides) out += k + " = " + v + "\n";
  return out;
}

ScenarioSpec resolved_scenario(const RunConfig& cfg) {
  ScenarioSpec spec = scenario_spec(cfg.scenario_id);
  for (const auto& [k, v] : cfg.scenario_overrides) {
    for (const auto& e : scenario_entries()) {
      if (e.key == k) e.set(spec, v);
    }
  }
  return spec;
}

void validate(const RunConfig& cfg) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::invalid_config, what); };
  const ScenarioSpec spec = resolved_scenario(cfg);
  validate(cfg.agent);
  if (cfg.total_env_steps <= 0) bad("total_env_steps must be positive");
  if (cfg.eval_episodes <= 0) bad("eval_episodes must be positive");
  if (cfg.eval_every <= 0) bad("eval_every must be positive");
  if (!(cfg.world.step > 0.0)) bad("world.step must be positive");
  try {
    horizon_steps(cfg.world.step, cfg.world.horizon);
  } catch (const Error& e) {
    bad(std::string("world.horizon: ") + e.what());
  }
  if (cfg.world.n_max < 1) bad("world.n_max must be >= 1");
  if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0)) bad("target.confidence must lie in (0, 1)");
  if (cfg.arc_samples < 0) bad("target.arc_samples must be >= 0");
  if (spec.min_static > spec.max_static || spec.min_dynamic > spec.max_dynamic) {
    bad("scenario participant count range is empty");
  }
  if (spec.start_lane < 0 || spec.start_lane >= spec.lane_count || spec.target_lane < 0 ||
      spec.target_lane >= spec.lane_count) {
    bad("scenario lanes out of range");
  }
  squared(cfg.noise.ego_std, "noise.ego_std");
  squared(cfg.noise.other_std, "noise.other_std");
  if (!cfg.noise.ego_initial_std.empty()) squared(cfg.noise.ego_initial_std, "noise.ego_initial_std");
  if (!cfg.noise.other_initial_std.empty()) {
    squared(cfg.noise.other_initial_std, "noise.other_initial_std");
  }
}

TargetSpec target_spec(const RunConfig& cfg) {
  TargetSpec t;
  t.strategy = strategy_for(cfg.method);
  t.step = cfg.world.step;
  t.horizon = cfg.world.horizon;
  t.gamma = cfg.agent.gamma;
  t.confidence = cfg.confidence;
  t.arc_samples = cfg.arc_samples;
  return t;
}

NoiseModel noise_model(const RunConfig& cfg) {
  return NoiseModel::constant_velocity(cfg.world.step, squared(cfg.noise.ego_std, "noise.ego_std"),
                                       squared(cfg.noise.other_std, "noise.other_std"));
}

StateCovariance initial_ego_covariance(const RunConfig& cfg) {
  StateCovariance c;
  if (cfg.noise.ego_initial_std.empty()) {
    const double p = cfg.world.tracking_sigma_pos, v = cfg.world.tracking_sigma_speed;
    c.m.diagonal() << p * p, p * p, v * v, v * v;
  } else {
    c.m.diagonal() = squared(cfg.noise.ego_initial_std, "noise.ego_initial_std");
  }
  return c;
}

StateCovariance initial_other_covariance(const RunConfig& cfg) {
  StateCovariance c;
  const auto& src = cfg.noise.other_initial_std.empty() ? cfg.noise.other_std
                                                         : cfg.noise.other_initial_std;
  c.m.diagonal() = squared(src, "noise.other_initial_std");
  return c;
}

}  // namespace rlplan
