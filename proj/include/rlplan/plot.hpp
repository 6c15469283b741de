#pragma once

#include <string>
#include <vector>

#include "rlplan/metrics.hpp"

namespace rlplan {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Trailing mean over `window` samples (shorter at the start).
std::vector<double> rolling_mean(const std::vector<double>& v, std::size_t window);

/// Standalone SVG line chart.
std::string render_svg(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series);

/// Reads metrics files and writes reward.svg, collision_rate.svg and
/// success_rate.svg into `out_dir`, one smoothed series per file labelled with
/// the file stem. Returns the written paths.
std::vector<std::string> emit_plots(const std::vector<std::string>& csv_paths,
                                    const std::string& out_dir, std::size_t window = 100);

}  // namespace rlplan
