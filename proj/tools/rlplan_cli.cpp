#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "rlplan/config.hpp"
#include "rlplan/error.hpp"
#include "rlplan/harness.hpp"
#include "rlplan/plot.hpp"

namespace fs = std::filesystem;
using namespace rlplan;

namespace {

struct CommonFlags {
  std::string config;
  int scenario = 0;
  std::string method;
  long long seed = -1;
  long steps = 0;
  std::vector<std::string> settings;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "key = value configuration file");
  cmd->add_option("--scenario", f.scenario, "scenario id (1-4)");
  cmd->add_option("--method", f.method, "baseline1, baseline2, rp, irp or irp_up");
  cmd->add_option("--seed", f.seed, "root seed");
  cmd->add_option("--steps", f.steps, "total environment steps");
  cmd->add_option("--set", f.settings, "extra key=value overrides")->take_all();
}

RunConfig build_config(const CommonFlags& f, const std::string& fallback_config = {}) {
  RunConfig cfg;
  if (!f.config.empty()) {
    apply_config_file(cfg, f.config);
  } else if (!fallback_config.empty() && fs::exists(fallback_config)) {
    apply_config_file(cfg, fallback_config);
  }
  if (f.scenario) cfg.scenario_id = f.scenario;
  if (!f.method.empty()) cfg.method = parse_method(f.method);
  if (f.seed >= 0) cfg.seed = static_cast<std::uint64_t>(f.seed);
  if (f.steps) cfg.total_env_steps = f.steps;
  for (const std::string& kv : f.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::invalid_config, "--set expects key=value");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void print_eval(const EvalAggregate& a) {
  std::printf("episodes=%d avg_reward_per_step=%.6f collision_rate=%.4f success_rate=%.4f\n",
              a.episodes, a.avg_reward_per_step, a.collision_rate, a.success_rate);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-conditioned DDPG trajectory planning with predicted critic targets"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  std::string train_out;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "train one agent and write metrics and checkpoints");
  add_common(train, train_flags);
  train->add_option("--out", train_out, "output directory");
  train->add_flag("--quiet", quiet, "no per-episode progress");

  CommonFlags eval_flags;
  std::string checkpoint;
  int episodes = 0;
  auto* eval = app.add_subcommand("eval", "evaluate a saved actor without exploration noise");
  add_common(eval, eval_flags);
  eval->add_option("--checkpoint", checkpoint, "actor checkpoint")->required();
  eval->add_option("--episodes", episodes, "evaluation episodes");

  std::string plot_out;
  std::vector<std::string> plot_files;
  std::size_t window = 100;
  auto* plot = app.add_subcommand("plot", "render SVG charts from metrics files");
  plot->add_option("--out", plot_out, "output directory")->required();
  plot->add_option("--window", window, "smoothing window in episodes");
  plot->add_option("files", plot_files, "metrics.csv files")->required();

  CommonFlags exp_flags;
  std::string exp_out;
  std::vector<std::string> exp_methods = {"baseline1", "baseline2", "rp", "irp", "irp_up"};
  int exp_seeds = 5;
  auto* experiment =
      app.add_subcommand("experiment", "train every method on several seeds and tabulate results");
  add_common(experiment, exp_flags);
  experiment->add_option("--out", exp_out, "output directory")->required();
  experiment->add_option("--methods", exp_methods, "methods to run");
  experiment->add_option("--seeds", exp_seeds, "seeds 0 .. n-1");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      RunConfig cfg = build_config(train_flags);
      if (!train_out.empty()) cfg.out_dir = train_out;
      const auto t0 = std::chrono::steady_clock::now();
      const TrainingSummary s = run_training(cfg, [&](const MetricsRow& r) {
        if (!quiet && r.episode % 50 == 0) {
          std::printf("episode %ld step %ld reward/step %.4f roll_collision %.3f roll_success %.3f\n",
                      r.episode, r.env_step, r.avg_reward_per_step, r.roll_collision_rate,
                      r.roll_success_rate);
          std::fflush(stdout);
        }
      });
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::printf("finished %zu episodes in %.1f s; outputs in %s\n", s.rows.size(), secs,
                  cfg.out_dir.c_str());
    } else if (*eval) {
      const std::string sibling = (fs::path(checkpoint).parent_path() / "config.txt").string();
      RunConfig cfg = build_config(eval_flags, sibling);
      if (episodes) cfg.eval_episodes = episodes;
      if (eval->count("--episodes") && episodes <= 0) {
        throw Error(ErrorCode::invalid_config, "eval_episodes must be positive");
      }
      print_eval(run_eval(cfg, checkpoint));
    } else if (*plot) {
      for (const auto& p : emit_plots(plot_files, plot_out, window)) std::printf("%s\n", p.c_str());
    } else if (*experiment) {
      const RunConfig base = build_config(exp_flags);
      std::printf("method,seed,final_roll_success_rate,final_roll_collision_rate,episodes,seconds\n");
      for (const std::string& m : exp_methods) {
        for (int seed = 0; seed < exp_seeds; ++seed) {
          RunConfig cfg = base;
          cfg.method = parse_method(m);
          cfg.seed = static_cast<std::uint64_t>(seed);
          cfg.out_dir = (fs::path(exp_out) / (m + "_seed" + std::to_string(seed))).string();
          const auto t0 = std::chrono::steady_clock::now();
          const TrainingSummary s = run_training(cfg);
          const double secs =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          const MetricsRow last = s.rows.empty() ? MetricsRow{} : s.rows.back();
          std::printf("%s,%d,%.4f,%.4f,%zu,%.1f\n", m.c_str(), seed, last.roll_success_rate,
                      last.roll_collision_rate, s.rows.size(), secs);
          std::fflush(stdout);
        }
      }
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", to_string(e.code()), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
