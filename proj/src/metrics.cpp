#include "rlplan/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rlplan/error.hpp"

namespace rlplan {

void RollingRates::push(int collision, int success) {
  flags_.emplace_back(collision, success);
  collisions_ += collision;
  successes_ += success;
  if (flags_.size() > window_) {
    collisions_ -= flags_.front().first;
    successes_ -= flags_.front().second;
    flags_.pop_front();
  }
}

double RollingRates::collision_rate() const {
  return flags_.empty() ? 0.0 : static_cast<double>(collisions_) / flags_.size();
}

double RollingRates::success_rate() const {
  return flags_.empty() ? 0.0 : static_cast<double>(successes_) / flags_.size();
}

std::string format_row(const MetricsRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%ld,%ld,%.6f,%d,%d,%d,%.4f,%.4f", r.episode, r.env_step,
                r.avg_reward_per_step, r.collision, r.success, r.ep_len, r.roll_collision_rate,
                r.roll_success_rate);
  return buf;
}

namespace {

[[noreturn]] void malformed(const std::string& origin, int line, const std::string& what) {
  throw Error(ErrorCode::malformed_csv, origin + ": line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::vector<MetricsRow> parse_metrics(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) malformed(origin, 1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader) malformed(origin, 1, "unexpected header");

  std::vector<MetricsRow> rows;
  RollingRates rates;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    MetricsRow r;
    int consumed = 0;
    const int n = std::sscanf(line.c_str(), "%ld,%ld,%lf,%d,%d,%d,%lf,%lf%n", &r.episode,
                              &r.env_step, &r.avg_reward_per_step, &r.collision, &r.success,
                              &r.ep_len, &r.roll_collision_rate, &r.roll_success_rate, &consumed);
    if (n != 8 || consumed != static_cast<int>(line.size())) malformed(origin, number, "expected 8 fields");
    if (!std::isfinite(r.avg_reward_per_step)) malformed(origin, number, "non-finite reward");
    if ((r.collision != 0 && r.collision != 1) || (r.success != 0 && r.success != 1)) {
      malformed(origin, number, "flags must be 0 or 1");
    }
    rates.push(r.collision, r.success);
    if (std::abs(rates.collision_rate() - r.roll_collision_rate) > 1e-4 ||
        std::abs(rates.success_rate() - r.roll_success_rate) > 1e-4) {
      malformed(origin, number, "rolling rates disagree with the episode flags");
    }
    rows.push_back(r);
  }
  if (rows.empty()) malformed(origin, 2, "no data rows");
  return rows;
}

std::vector<MetricsRow> load_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_metrics(ss.str(), path);
}

}  // namespace rlplan
