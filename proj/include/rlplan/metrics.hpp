#pragma once

#include <deque>
#include <string>
#include <vector>

namespace rlplan {

inline constexpr const char* kMetricsHeader =
    "episode,env_step,avg_reward_per_step,collision,success,ep_len,roll_collision_rate,"
    "roll_success_rate";

struct MetricsRow {
  long episode = 0;
  long env_step = 0;  // environment steps taken when the episode ended
  double avg_reward_per_step = 0.0;
  int collision = 0;
  int success = 0;
  int ep_len = 0;
  double roll_collision_rate = 0.0;
  double roll_success_rate = 0.0;
};

// Collision and success rates over the trailing `window` episodes.
class RollingRates {
 public:
  explicit RollingRates(std::size_t window = 100) : window_(window) {}

  void push(int collision, int success);
  double collision_rate() const;
  double success_rate() const;

 private:
  std::size_t window_;
  std::deque<std::pair<int, int>> flags_;
  int collisions_ = 0;
  int successes_ = 0;
};

std::string format_row(const MetricsRow& row);

/// Parses a metrics file and re-derives the rolling rates from the per-episode
/// flags; throws malformed_csv (with the 1-based line number) on bad rows or
/// on rates that disagree with the recomputation.
std::vector<MetricsRow> load_metrics(const std::string& path);
std::vector<MetricsRow> parse_metrics(const std::string& text, const std::string& origin);

struct EvalAggregate {
  int episodes = 0;
  double avg_reward_per_step = 0.0;
  double collision_rate = 0.0;
  double success_rate = 0.0;

  bool operator==(const EvalAggregate&) const = default;
};

}  // namespace rlplan
