#include "rlplan/agent.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "rlplan/error.hpp"
#include "rlplan/targets.hpp"

namespace rlplan {

double ActionSpace::to_physical(int i, double u) const {
  const double c = std::clamp(u, -1.0, 1.0);
  return lo[i] + (hi[i] - lo[i]) * 0.5 * (c + 1.0);
}

double ActionSpace::to_normalized(int i, double value) const {
  return std::clamp(2.0 * (value - lo[i]) / (hi[i] - lo[i]) - 1.0, -1.0, 1.0);
}

ActionSpace goal_action_space() {
  return {{1.0, -5.25, 1.0, 0.0}, {4.0, 5.25, 50.0, 16.7}};
}

ActionSpace control_action_space() { return {{-0.5, -6.0}, {0.5, 3.0}}; }

GoalAction to_goal_action(const Eigen::VectorXd& u) {
  static const ActionSpace space = goal_action_space();
  if (u.size() != space.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "goal action needs 4 components");
  }
  return {space.to_physical(0, u(0)), space.to_physical(1, u(1)), space.to_physical(2, u(2)),
          space.to_physical(3, u(3))};
}

Eigen::VectorXd normalize_goal(const GoalAction& g) {
  static const ActionSpace space = goal_action_space();
  Eigen::VectorXd u(4);
  u << space.to_normalized(0, g.time_to_goal), space.to_normalized(1, g.d_target),
      space.to_normalized(2, g.s_advance), space.to_normalized(3, g.s_d_target);
  return u;
}

ControlAction to_control_action(const Eigen::VectorXd& u) {
  static const ActionSpace space = control_action_space();
  if (u.size() != space.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "control action needs 2 components");
  }
  return {space.to_physical(0, u(0)), space.to_physical(1, u(1))};
}

bool within_bounds(const GoalAction& g) {
  const ActionSpace space = goal_action_space();
  const double v[4] = {g.time_to_goal, g.d_target, g.s_advance, g.s_d_target};
  for (int i = 0; i < 4; ++i) {
    if (!(v[i] >= space.lo[i] && v[i] <= space.hi[i])) return false;
  }
  return true;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error(ErrorCode::invalid_config, "replay capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::store(ReplayTransition tr) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(tr));
  } else {
    items_[next_] = std::move(tr);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<const ReplayTransition*> ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  const std::size_t n = items_.size();
  if (batch_size > n) {
    throw Error(ErrorCode::undersized_buffer, "buffer holds " + std::to_string(n) +
                                                  " transitions, batch needs " +
                                                  std::to_string(batch_size));
  }
  // Floyd's subset sampling.
  std::unordered_set<std::size_t> chosen;
  std::vector<const ReplayTransition*> out;
  out.reserve(batch_size);
  for (std::size_t j = n - batch_size; j < n; ++j) {
    std::size_t t = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(j)));
    if (!chosen.insert(t).second) {
      chosen.insert(j);
      t = j;
    }
    out.push_back(&items_[t]);
  }
  return out;
}

void validate(const AgentConfig& c) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::invalid_config, what); };
  if (!(c.gamma > 0.0 && c.gamma < 1.0)) bad("gamma must lie in (0, 1)");
  if (!(c.polyak > 0.0 && c.polyak <= 1.0)) bad("polyak rate must lie in (0, 1]");
  if (!(c.lr_actor > 0.0) || !(c.lr_critic > 0.0)) bad("learning rates must be positive");
  if (c.batch_size == 0 || c.replay_capacity < c.batch_size) bad("replay smaller than a batch");
  if (c.update_every < 1) bad("update_every must be >= 1");
  if (c.warmup_steps < 0) bad("warmup must be non-negative");
  if (c.noise_start < 0.0 || c.noise_end < 0.0) bad("exploration noise must be non-negative");
  if (!(c.noise_correlation >= 0.0 && c.noise_correlation < 1.0)) bad("noise correlation must be in [0, 1)");
  for (int h : c.hidden) {
    if (h <= 0) bad("hidden layer sizes must be positive");
  }
}

double exploration_sigma(const AgentConfig& cfg, long env_steps) {
  if (cfg.warmup_steps <= 0 || env_steps >= cfg.warmup_steps) return cfg.noise_end;
  const double f = static_cast<double>(env_steps) / static_cast<double>(cfg.warmup_steps);
  return cfg.noise_start + (cfg.noise_end - cfg.noise_start) * f;
}

Eigen::VectorXd select_action(const MlpParams& actor, const Observation& obs, double noise_sigma,
                              Rng& rng) {
  const Eigen::Map<const Eigen::VectorXd> x(obs.features.data(),
                                            static_cast<Eigen::Index>(obs.features.size()));
  Eigen::VectorXd u = forward(actor, Eigen::VectorXd(x), nullptr);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    u(i) = std::clamp(u(i) + gaussian(rng, noise_sigma), -1.0, 1.0);
  }
  return u;
}

Eigen::VectorXd ExplorationNoise::next(Eigen::Index dim, double sigma, Rng& rng) {
  Eigen::VectorXd e(dim);
  for (Eigen::Index i = 0; i < dim; ++i) e(i) = gaussian(rng, sigma);
  if (rho_ == 0.0) return e;
  if (state_.size() != dim) {
    state_ = e;
  } else {
    state_ = rho_ * state_ + std::sqrt(1.0 - rho_ * rho_) * e;
  }
  return state_;
}

Eigen::VectorXd select_action(const MlpParams& actor, const Observation& obs,
                              ExplorationNoise& noise, double noise_sigma, Rng& rng) {
  const Eigen::Map<const Eigen::VectorXd> x(obs.features.data(),
                                            static_cast<Eigen::Index>(obs.features.size()));
  Eigen::VectorXd u = forward(actor, Eigen::VectorXd(x), nullptr);
  const Eigen::VectorXd n = noise.next(u.size(), noise_sigma, rng);
  for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = std::clamp(u(i) + n(i), -1.0, 1.0);
  return u;
}

GoalAction select_goal_action(const MlpParams& actor, const Observation& obs, double noise_sigma,
                              Rng& rng) {
  return to_goal_action(select_action(actor, obs, noise_sigma, rng));
}

Eigen::MatrixXd stack_observations(std::span<const ReplayTransition* const> batch, bool next) {
  if (batch.empty()) return {};
  const auto rows = static_cast<Eigen::Index>(batch.front()->obs.features.size());
  Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto& f = next ? batch[j]->next_obs.features : batch[j]->obs.features;
    if (static_cast<Eigen::Index>(f.size()) != rows) {
      throw Error(ErrorCode::shape_mismatch, "observation sizes differ within a batch");
    }
    x.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(f.data(), rows);
  }
  return x;
}

Eigen::MatrixXd stack_actions(std::span<const ReplayTransition* const> batch) {
  if (batch.empty()) return {};
  const Eigen::Index rows = batch.front()->action.size();
  Eigen::MatrixXd a(rows, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    if (batch[j]->action.size() != rows) {
      throw Error(ErrorCode::shape_mismatch, "action sizes differ within a batch");
    }
    a.col(static_cast<Eigen::Index>(j)) = batch[j]->action;
  }
  return a;
}

DdpgAgent::DdpgAgent(int obs_dim, ActionSpace space_in, AgentConfig cfg, std::uint64_t seed)
    : space(std::move(space_in)), config(std::move(cfg)) {
  validate(config);
  Rng init(substream_seed(seed, "init"));
  std::vector<int> actor_sizes{obs_dim};
  actor_sizes.insert(actor_sizes.end(), config.hidden.begin(), config.hidden.end());
  actor_sizes.push_back(space.dim());
  std::vector<int> critic_sizes{obs_dim + space.dim()};
  critic_sizes.insert(critic_sizes.end(), config.hidden.begin(), config.hidden.end());
  critic_sizes.push_back(1);

  actor = MlpParams::init(actor_sizes, OutputActivation::tanh, init);
  critic = MlpParams::init(critic_sizes, OutputActivation::identity, init);
  target_actor = actor;
  target_critic = critic;
  actor_opt = OptimizerState::for_params(actor, config.lr_actor);
  critic_opt = OptimizerState::for_params(critic, config.lr_critic);
}

double DdpgAgent::critic_update(std::span<const ReplayTransition* const> batch,
                                const TargetSpec& spec, const NoiseModel* noise) {
  const Bootstrap nets = network_bootstrap(target_actor, target_critic);
  const std::vector<double> y = compute_targets(batch, nets, spec, noise);

  const Eigen::MatrixXd obs = stack_observations(batch, false);
  const Eigen::MatrixXd act = stack_actions(batch);
  Eigen::MatrixXd x(obs.rows() + act.rows(), obs.cols());
  x << obs, act;

  ForwardCache cache;
  const Eigen::MatrixXd q = forward(critic, x, &cache);
  const double n = static_cast<double>(batch.size());
  Eigen::MatrixXd grad(1, q.cols());
  double loss = 0.0;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const double e = q(0, j) - y[static_cast<std::size_t>(j)];
    loss += e * e;
    grad(0, j) = 2.0 * e / n;
  }
  const BackwardResult br = backward(critic, cache, grad);
  optimizer_step(critic, br.grads, critic_opt);
  return loss / n;
}

double DdpgAgent::actor_update(std::span<const ReplayTransition* const> batch) {
  const Eigen::MatrixXd obs = stack_observations(batch, false);
  ForwardCache actor_cache;
  const Eigen::MatrixXd act = forward(actor, obs, &actor_cache);
  Eigen::MatrixXd x(obs.rows() + act.rows(), obs.cols());
  x << obs, act;

  ForwardCache critic_cache;
  const Eigen::MatrixXd q = forward(critic, x, &critic_cache);
  const double n = static_cast<double>(batch.size());
  const Eigen::MatrixXd grad = Eigen::MatrixXd::Constant(1, q.cols(), -1.0 / n);
  const BackwardResult through_critic = backward(critic, critic_cache, grad);
  const Eigen::MatrixXd action_grad = through_critic.input_grad.bottomRows(act.rows());
  const BackwardResult br = backward(actor, actor_cache, action_grad);
  optimizer_step(actor, br.grads, actor_opt);
  return -q.mean();
}

void DdpgAgent::update_targets() {
  soft_update(target_actor, actor, config.polyak);
  soft_update(target_critic, critic, config.polyak);
}

}  // namespace rlplan
