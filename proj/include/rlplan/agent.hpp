#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "rlplan/neural.hpp"
#include "rlplan/rng.hpp"
#include "rlplan/uncertainty.hpp"
#include "rlplan/world.hpp"

namespace rlplan {

// Box-bounded continuous action. Networks work in [-1, 1]^dim; the bounds map
// that cube affinely onto physical units.
struct ActionSpace {
  std::vector<double> lo;
  std::vector<double> hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double to_physical(int i, double u) const;
  double to_normalized(int i, double value) const;
};

// (time_to_goal [1, 4] s, d_target [-5.25, 5.25] m, s_advance [1, 50] m,
//  s_d_target [0, 16.7] m/s)
ActionSpace goal_action_space();
// (steer [-0.5, 0.5] rad, accel [-6, 3] m/s^2)
ActionSpace control_action_space();

GoalAction to_goal_action(const Eigen::VectorXd& normalized);
Eigen::VectorXd normalize_goal(const GoalAction& goal);
ControlAction to_control_action(const Eigen::VectorXd& normalized);
bool within_bounds(const GoalAction& goal);

/// Snapshot needed to replay a transition through predicted rollouts: the ego
/// state at t, the realized state at t + step, participants with their
/// predicted trajectories made at t, and initial covariances.
struct PredictionContext {
  VehicleState av;                          // at t
  VehicleState av_next;                     // realized at t + step
  std::vector<VehicleState> participants;   // at t
  std::vector<VehicleState> participants_next;
  std::vector<PlannedTrajectory> predictions;  // horizon / step states each
  StateCovariance ego_cov0;
  StateCovariance other_cov0;
  bool has_covariance = false;
  std::shared_ptr<const WorldModel> model;
};

struct ReplayTransition {
  Observation obs;
  Eigen::VectorXd action;  // normalized
  double reward = 0.0;
  Observation next_obs;
  bool done = false;
  std::shared_ptr<const PredictionContext> ctx;
};

/// Fixed-capacity ring buffer; the oldest transition is overwritten first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void store(ReplayTransition tr);
  // Uniform without replacement within one batch.
  std::vector<const ReplayTransition*> sample(std::size_t batch_size, Rng& rng) const;

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const ReplayTransition& at(std::size_t i) const { return items_[i]; }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<ReplayTransition> items_;
};

enum class TargetStrategy { td1, rp, irp, irp_up };

struct AgentConfig {
  double gamma = 0.99;
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  std::size_t replay_capacity = 200000;
  std::size_t batch_size = 128;
  double polyak = 0.005;
  double noise_start = 0.5;  // exploration std in normalized action units
  double noise_end = 0.1;
  double noise_correlation = 0.0;  // AR(1) coefficient between consecutive steps, 0 = white
  long warmup_steps = 2000;
  int update_every = 1;
  std::vector<int> hidden = {128, 128};
};

// Validates gamma in (0, 1), polyak in (0, 1], positive sizes.
void validate(const AgentConfig& cfg);

/// Exploration std after `env_steps`, decaying linearly over warmup.
double exploration_sigma(const AgentConfig& cfg, long env_steps);

/// tanh actor output plus Gaussian noise, clipped to [-1, 1].
Eigen::VectorXd select_action(const MlpParams& actor, const Observation& obs, double noise_sigma,
                              Rng& rng);
GoalAction select_goal_action(const MlpParams& actor, const Observation& obs, double noise_sigma,
                              Rng& rng);

// Exploration noise with stationary std sigma and lag-one correlation rho.
// With rho = 0 it draws exactly what select_action draws.
class ExplorationNoise {
 public:
  explicit ExplorationNoise(double rho = 0.0) : rho_(rho) {}
  void reset() { state_.resize(0); }
  Eigen::VectorXd next(Eigen::Index dim, double sigma, Rng& rng);

 private:
  double rho_;
  Eigen::VectorXd state_;
};

Eigen::VectorXd select_action(const MlpParams& actor, const Observation& obs,
                              ExplorationNoise& noise, double noise_sigma, Rng& rng);

struct TargetSpec;

struct DdpgAgent {
  DdpgAgent(int obs_dim, ActionSpace space, AgentConfig cfg, std::uint64_t seed);

  /// One critic step toward targets from the selected strategy, evaluated
  /// with the target networks. Returns the loss before the step.
  double critic_update(std::span<const ReplayTransition* const> batch, const TargetSpec& spec,
                       const NoiseModel* noise = nullptr);

  /// One actor step ascending Q(s, pi(s)). Returns -mean Q before the step.
  double actor_update(std::span<const ReplayTransition* const> batch);

  void update_targets();

  ActionSpace space;
  AgentConfig config;
  MlpParams actor;
  MlpParams critic;
  MlpParams target_actor;
  MlpParams target_critic;
  OptimizerState actor_opt;
  OptimizerState critic_opt;
};

// Column-stacked observations / actions of a batch.
Eigen::MatrixXd stack_observations(std::span<const ReplayTransition* const> batch, bool next);
Eigen::MatrixXd stack_actions(std::span<const ReplayTransition* const> batch);

}  // namespace rlplan
