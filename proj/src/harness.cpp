#include "rlplan/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rlplan/error.hpp"
#include "rlplan/targets.hpp"

namespace rlplan {

namespace fs = std::filesystem;

WorldState start_episode(const RunConfig& cfg, std::uint64_t episode_seed) {
  WorldState w = spawn_scenario(resolved_scenario(cfg), episode_seed, cfg.world);
  if (cfg.method == Method::irp_up) {
    w.inflation = FootprintInflation{
        confidence_ellipse(initial_ego_covariance(cfg).position_block(), cfg.confidence),
        confidence_ellipse(initial_other_covariance(cfg).position_block(), cfg.confidence)};
  }
  return w;
}

namespace {

WorldState env_step(const RunConfig& cfg, const WorldState& w, const Eigen::VectorXd& u) {
  if (uses_goal_actions(cfg.method)) {
    PlannedTrajectory traj;
    traj.step = cfg.world.step;
    traj.horizon = cfg.world.step;
    traj.states.push_back(
        plan_first_state(w.av.frenet, to_goal_action(u), cfg.world.step, cfg.world.max_time_to_goal));
    return step_world(w, traj);
  }
  return step_world(w, to_control_action(u));
}

bool terminal(EpisodeStatus s) {
  return s == EpisodeStatus::collision || s == EpisodeStatus::success ||
         s == EpisodeStatus::off_course;
}

ActionSpace action_space_for(Method m) {
  return uses_goal_actions(m) ? goal_action_space() : control_action_space();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << text;
}

std::string format_eval(long env_step, const EvalAggregate& a) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%ld,%d,%.6f,%.4f,%.4f", env_step, a.episodes,
                a.avg_reward_per_step, a.collision_rate, a.success_rate);
  return buf;
}

}  // namespace

EpisodeResult run_episode(const RunConfig& cfg, const MlpParams& actor, std::uint64_t episode_seed,
                          double noise_sigma, Rng& rng) {
  WorldState w = start_episode(cfg, episode_seed);
  EpisodeResult r;
  while (true) {
    const Eigen::VectorXd u = select_action(actor, observe(w), noise_sigma, rng);
    WorldState next = env_step(cfg, w, u);
    r.total_reward += compute_reward(w, next).total;
    ++r.steps;
    w = std::move(next);
    r.status = episode_status(w);
    if (r.status != EpisodeStatus::running) return r;
  }
}

EvalAggregate run_eval(const RunConfig& cfg, const MlpParams& actor) {
  if (cfg.eval_episodes <= 0) throw Error(ErrorCode::invalid_config, "eval_episodes must be positive");
  const int obs_dim = observation_size(cfg.world.n_max);
  const int act_dim = action_space_for(cfg.method).dim();
  if (actor.input_size() != obs_dim || actor.output_size() != act_dim) {
    throw Error(ErrorCode::shape_mismatch, "actor shape does not fit this configuration");
  }
  EvalAggregate agg;
  Rng unused(0);
  for (int i = 0; i < cfg.eval_episodes; ++i) {
    const EpisodeResult r =
        run_episode(cfg, actor, substream_seed(cfg.seed, "eval", static_cast<std::uint64_t>(i)),
                    0.0, unused);
    agg.avg_reward_per_step += r.total_reward / r.steps;
    agg.collision_rate += r.status == EpisodeStatus::collision ? 1.0 : 0.0;
    agg.success_rate += r.status == EpisodeStatus::success ? 1.0 : 0.0;
  }
  agg.episodes = cfg.eval_episodes;
  agg.avg_reward_per_step /= cfg.eval_episodes;
  agg.collision_rate /= cfg.eval_episodes;
  agg.success_rate /= cfg.eval_episodes;
  return agg;
}

EvalAggregate run_eval(const RunConfig& cfg, const std::string& checkpoint) {
  return run_eval(cfg, load_mlp(checkpoint));
}

TrainingSummary run_training(const RunConfig& cfg, const ProgressFn& progress) {
  validate(cfg);
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  write_text(out / "config.txt", dump_config(cfg));

  const int obs_dim = observation_size(cfg.world.n_max);
  DdpgAgent agent(obs_dim, action_space_for(cfg.method), cfg.agent, cfg.seed);
  ReplayBuffer buffer(cfg.agent.replay_capacity);
  Rng explore = make_stream(cfg.seed, "exploration");
  ExplorationNoise explore_noise(cfg.agent.noise_correlation);
  Rng sampler = make_stream(cfg.seed, "replay");

  const TargetSpec tspec = target_spec(cfg);
  const bool predicted = tspec.strategy != TargetStrategy::td1;
  const NoiseModel noise = noise_model(cfg);
  const StateCovariance ego0 = initial_ego_covariance(cfg);
  const StateCovariance other0 = initial_other_covariance(cfg);

  std::ofstream metrics(out / "metrics.csv", std::ios::binary);
  std::ofstream evals(out / "eval.csv", std::ios::binary);
  if (!metrics || !evals) throw Error(ErrorCode::io, "cannot write into " + out.string());
  metrics << kMetricsHeader << "\n";
  evals << "env_step,episodes,avg_reward_per_step,collision_rate,success_rate\n";
  std::ofstream trace;
  if (cfg.write_trace) {
    trace.open(out / "trace.csv", std::ios::binary);
    trace << "episode,tick,s,d,s_d,d_d,heading,reward\n";
  }

  TrainingSummary summary;
  RollingRates rates;
  MlpParams best_actor = agent.actor, best_critic = agent.critic;
  long env_steps = 0;
  long episode = 0;

  while (env_steps < cfg.total_env_steps) {
    WorldState w = start_episode(cfg, substream_seed(cfg.seed, "episode", static_cast<std::uint64_t>(episode)));
    double total = 0.0;
    int steps = 0;
    EpisodeStatus status = EpisodeStatus::running;
    explore_noise.reset();

    while (status == EpisodeStatus::running && env_steps < cfg.total_env_steps) {
      ReplayTransition tr;
      tr.obs = observe(w);
      tr.action = select_action(agent.actor, tr.obs, explore_noise,
                                exploration_sigma(cfg.agent, env_steps), explore);
      WorldState next = env_step(cfg, w, tr.action);
      tr.reward = compute_reward(w, next).total;
      tr.next_obs = observe(next);
      status = episode_status(next);
      tr.done = terminal(status);
      if (predicted) {
        auto ctx = std::make_shared<PredictionContext>();
        ctx->av = w.av;
        ctx->av_next = next.av;
        ctx->participants = w.participants;
        ctx->participants_next = next.participants;
        ctx->predictions = predict_participants(w, cfg.world.horizon, cfg.world.step);
        ctx->ego_cov0 = ego0;
        ctx->other_cov0 = other0;
        ctx->has_covariance = true;
        ctx->model = w.model;
        tr.ctx = std::move(ctx);
      }
      if (cfg.write_trace) {
        const FrenetState& f = next.av.frenet;
        char buf[200];
        std::snprintf(buf, sizeof buf, "%ld,%lld,%.4f,%.4f,%.4f,%.4f,%.4f,%.5f\n", episode,
                      static_cast<long long>(next.tick), f.s, f.d, f.s_d, f.d_d, next.av.heading,
                      tr.reward);
        trace << buf;
      }
      total += tr.reward;
      ++steps;
      ++env_steps;
      buffer.store(std::move(tr));
      w = std::move(next);

      if (env_steps >= cfg.agent.warmup_steps && buffer.size() >= cfg.agent.batch_size &&
          env_steps % cfg.agent.update_every == 0) {
        const auto batch = buffer.sample(cfg.agent.batch_size, sampler);
        agent.critic_update(batch, tspec, &noise);
        agent.actor_update(batch);
        agent.update_targets();
      }

      if (env_steps % cfg.eval_every == 0) {
        const EvalAggregate a = run_eval(cfg, agent.actor);
        summary.evaluations.push_back({env_steps, a});
        evals << format_eval(env_steps, a) << "\n";
      }
    }
    if (status == EpisodeStatus::running) break;  // budget ran out mid-episode

    MetricsRow row;
    row.episode = episode;
    row.env_step = env_steps;
    row.avg_reward_per_step = total / steps;
    row.collision = status == EpisodeStatus::collision;
    row.success = status == EpisodeStatus::success;
    row.ep_len = steps;
    rates.push(row.collision, row.success);
    row.roll_collision_rate = rates.collision_rate();
    row.roll_success_rate = rates.success_rate();
    metrics << format_row(row) << "\n";
    summary.rows.push_back(row);
    if (progress) progress(row);

    if (row.roll_success_rate > summary.best_roll_success) {
      summary.best_roll_success = row.roll_success_rate;
      summary.best_env_step = env_steps;
      best_actor = agent.actor;
      best_critic = agent.critic;
    }
    ++episode;
  }
  metrics.close();
  evals.close();

  summary.best_checkpoint = (out / "best_actor.bin").string();
  summary.final_checkpoint = (out / "final_actor.bin").string();
  save_mlp(best_actor, summary.best_checkpoint);
  save_mlp(best_critic, (out / "best_critic.bin").string());
  save_mlp(agent.actor, summary.final_checkpoint);
  save_mlp(agent.critic, (out / "final_critic.bin").string());

  std::ostringstream s;
  s << "method = " << to_string(cfg.method) << "\n";
  s << "scenario = " << cfg.scenario_id << "\n";
  s << "seed = " << cfg.seed << "\n";
  s << "env_steps = " << env_steps << "\n";
  s << "episodes = " << summary.rows.size() << "\n";
  if (!summary.rows.empty()) {
    s << "final_roll_success_rate = " << summary.rows.back().roll_success_rate << "\n";
    s << "final_roll_collision_rate = " << summary.rows.back().roll_collision_rate << "\n";
  }
  s << "best_checkpoint_env_step = " << summary.best_env_step << "\n";
  s << "best_roll_success_rate = " << summary.best_roll_success << "\n";
  const EvalPoint* best_eval = nullptr;
  for (const EvalPoint& e : summary.evaluations) {
    if (!best_eval || e.aggregate.success_rate > best_eval->aggregate.success_rate) best_eval = &e;
  }
  if (best_eval) {
    s << "best_eval_env_step = " << best_eval->env_step << "\n";
    s << "best_eval = " << format_eval(best_eval->env_step, best_eval->aggregate) << "\n";
  }
  write_text(out / "summary.txt", s.str());
  return summary;
}

}  // namespace rlplan
