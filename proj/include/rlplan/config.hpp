#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rlplan/agent.hpp"
#include "rlplan/targets.hpp"
#include "rlplan/uncertainty.hpp"
#include "rlplan/world.hpp"

namespace rlplan {

enum class Method { baseline1, baseline2, rp, irp, irp_up };

const char* to_string(Method m);
Method parse_method(const std::string& name);
TargetStrategy strategy_for(Method m);
bool uses_goal_actions(Method m);

struct NoiseSettings {
  // Per-step process noise standard deviations for (x, y, x_dot, y_dot).
  std::vector<double> ego_std = {0.02, 0.02, 0.05, 0.05};
  std::vector<double> other_std = {0.05, 0.05, 0.1, 0.1};
  // Initial covariance standard deviations; empty means "derive": the ego
  // uses the tracking noise, others use other_std.
  std::vector<double> ego_initial_std;
  std::vector<double> other_initial_std;
};

struct RunConfig {
  int scenario_id = 1;
  Method method = Method::baseline2;
  std::uint64_t seed = 0;
  long total_env_steps = 50000;
  long eval_every = 5000;
  int eval_episodes = 10;
  std::string out_dir = "run";
  bool write_trace = false;

  AgentConfig agent;
  WorldConfig world;
  double confidence = 0.95;
  int arc_samples = 4;
  NoiseSettings noise;
  // `scenario.<field>` settings, applied on top of the scenario defaults.
  std::vector<std::pair<std::string, std::string>> scenario_overrides;
};

// Throws invalid_config on inconsistent combinations.
void validate(const RunConfig& cfg);

ScenarioSpec resolved_scenario(const RunConfig& cfg);
TargetSpec target_spec(const RunConfig& cfg);
NoiseModel noise_model(const RunConfig& cfg);
StateCovariance initial_ego_covariance(const RunConfig& cfg);
StateCovariance initial_other_covariance(const RunConfig& cfg);

/// Applies `key = value` lines on top of `cfg`. `#` starts a comment; unknown
/// keys and malformed values throw invalid_config naming the line.
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin);
void apply_config_file(RunConfig& cfg, const std::string& path);
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Every key with its current value, in the same format the loader reads.
std::string dump_config(const RunConfig& cfg);

}  // namespace rlplan
