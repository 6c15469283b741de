#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rlplan/agent.hpp"
#include "rlplan/neural.hpp"
#include "rlplan/uncertainty.hpp"
#include "rlplan/world.hpp"

namespace rlplan {

struct TargetSpec {
  TargetStrategy strategy = TargetStrategy::td1;
  double step = 0.1;
  double horizon = 3.0;
  double gamma = 0.99;
  double confidence = 0.95;  // irp_up only
  int arc_samples = 4;       // irp_up only
};

const char* to_string(TargetStrategy s);
TargetStrategy parse_strategy(const std::string& name);

// Policy and value used to bootstrap targets. Columns are samples; actions are
// normalized.
struct Bootstrap {
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd& obs)> policy;
  std::function<Eigen::VectorXd(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& actions)> value;
};

Bootstrap network_bootstrap(const MlpParams& actor, const MlpParams& critic);

// One predicted state of a rollout at tau = index * step.
struct PredictedStep {
  double tau = 0.0;
  Observation obs;
  double reward = 0.0;  // reward of the transition into this state
  bool collision = false;
  InflatedFootprint av_footprint;
  std::vector<InflatedFootprint> participant_footprints;
  StateCovariance ego_cov;
  StateCovariance other_cov;
};

struct PredictedRollout {
  std::vector<PredictedStep> steps;  // tau = step ... horizon
  std::optional<Observation> bootstrap_obs;
  Eigen::VectorXd bootstrap_action;
  double bootstrap_value = 0.0;
  double target = 0.0;
  bool truncated = false;  // predicted collision before the horizon
};

double td1_target(const ReplayTransition& tr, const Bootstrap& nets, const TargetSpec& spec);
double rp_target(const ReplayTransition& tr, const Bootstrap& nets, const TargetSpec& spec);
double irp_target(const ReplayTransition& tr, const Bootstrap& nets, const TargetSpec& spec);
double irp_up_target(const ReplayTransition& tr, const Bootstrap& nets, const TargetSpec& spec,
                     const NoiseModel& noise);

/// Full record of the rollout behind a target. Steps keep being recorded past
/// a predicted collision; only the accumulated target stops there.
PredictedRollout predict_rollout(const ReplayTransition& tr, const Bootstrap& nets,
                                 const TargetSpec& spec, const NoiseModel* noise = nullptr);

/// Targets for a batch, stepping all rollouts in lockstep so policy and value
/// queries are batched.
std::vector<double> compute_targets(std::span<const ReplayTransition* const> batch,
                                    const Bootstrap& nets, const TargetSpec& spec,
                                    const NoiseModel* noise = nullptr);

}  // namespace rlplan
