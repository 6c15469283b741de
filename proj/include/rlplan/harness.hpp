#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rlplan/agent.hpp"
#include "rlplan/config.hpp"
#include "rlplan/metrics.hpp"

namespace rlplan {

struct EpisodeResult {
  double total_reward = 0.0;
  int steps = 0;
  EpisodeStatus status = EpisodeStatus::running;
};

struct EvalPoint {
  long env_step = 0;
  EvalAggregate aggregate;
};

struct TrainingSummary {
  std::vector<MetricsRow> rows;
  std::vector<EvalPoint> evaluations;
  long best_env_step = -1;          // when the best checkpoint was taken
  double best_roll_success = -1.0;  // rolling-100 training success at that point
  std::string best_checkpoint;
  std::string final_checkpoint;
};

// Progress callback, invoked after every finished episode.
using ProgressFn = std::function<void(const MetricsRow&)>;

/// Seeded training run. Writes metrics.csv, eval.csv, config.txt,
/// summary.txt, best/final actor and critic checkpoints into cfg.out_dir.
TrainingSummary run_training(const RunConfig& cfg, const ProgressFn& progress = {});

/// Noise-free policy over cfg.eval_episodes episodes whose seeds depend only
/// on cfg.seed, so repeated calls give identical aggregates.
EvalAggregate run_eval(const RunConfig& cfg, const MlpParams& actor);
EvalAggregate run_eval(const RunConfig& cfg, const std::string& checkpoint);

/// One episode with the given policy; `noise_sigma` 0 disables exploration.
EpisodeResult run_episode(const RunConfig& cfg, const MlpParams& actor, std::uint64_t episode_seed,
                          double noise_sigma, Rng& rng);

/// Initial world for an episode, with footprint inflation for irp_up agents.
WorldState start_episode(const RunConfig& cfg, std::uint64_t episode_seed);

}  // namespace rlplan
