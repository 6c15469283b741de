#include "rlplan/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

#include "rlplan/error.hpp"

namespace rlplan {

std::vector<double> rolling_mean(const std::vector<double>& v, std::size_t window) {
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sum += v[i];
    if (i >= window) sum -= v[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  if (std::abs(v) >= 1000.0) {
    std::snprintf(buf, sizeof buf, "%.0fk", v / 1000.0);
  } else {
    std::snprintf(buf, sizeof buf, "%.3g", v);
  }
  return buf;
}

}  // namespace

std::string render_svg(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series) {
  const double width = 720, height = 440;
  const double left = 70, right = 170, top = 40, bottom = 60;
  const double pw = width - left - right, ph = height - top - bottom;

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (const Series& s : series) {
    for (double x : s.x) x0 = std::min(x0, x), x1 = std::max(x1, x);
    for (double y : s.y) y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 <= x0) x1 = x0 + 1.0;
  if (y1 <= y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  auto px = [&](double x) { return left + pw * (x - x0) / (x1 - x0); };
  auto py = [&](double y) { return top + ph * (1.0 - (y - y0) / (y1 - y0)); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
         num(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
         escape(title) + "</text>\n";
  out += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) +
         "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"#333\"/>\n";

  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
    out += "<line x1=\"" + num(px(xv)) + "\" y1=\"" + num(top) + "\" x2=\"" + num(px(xv)) +
           "\" y2=\"" + num(top + ph) + "\" stroke=\"#ddd\"/>\n";
    out += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(top + ph + 16) +
           "\" text-anchor=\"middle\">" + tick_label(xv) + "</text>\n";
    out += "<line x1=\"" + num(left) + "\" y1=\"" + num(py(yv)) + "\" x2=\"" + num(left + pw) +
           "\" y2=\"" + num(py(yv)) + "\" stroke=\"#ddd\"/>\n";
    out += "<text x=\"" + num(left - 6) + "\" y=\"" + num(py(yv) + 4) +
           "\" text-anchor=\"end\">" + tick_label(yv) + "</text>\n";
  }
  out += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(height - 18) +
         "\" text-anchor=\"middle\">" + escape(x_label) + "</text>\n";
  out += "<text transform=\"translate(18," + num(top + ph / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + escape(y_label) + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    out += "<polyline class=\"series\" fill=\"none\" stroke-width=\"1.6\" stroke=\"" +
           std::string(color) + "\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      out += (i ? " " : "") + num(px(s.x[i])) + "," + num(py(s.y[i]));
    }
    out += "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    out += "<g class=\"legend\"><line x1=\"" + num(left + pw + 12) + "\" y1=\"" + num(ly - 4) +
           "\" x2=\"" + num(left + pw + 32) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/><text x=\"" + num(left + pw + 38) + "\" y=\"" + num(ly) + "\">" +
           escape(s.label) + "</text></g>\n";
  }
  out += "</svg>\n";
  return out;
}

std::vector<std::string> emit_plots(const std::vector<std::string>& csv_paths,
                                    const std::string& out_dir, std::size_t window) {
  namespace fs = std::filesystem;
  if (csv_paths.empty()) throw Error(ErrorCode::precondition, "no metrics files given");

  std::map<std::string, int> stem_count;
  for (const auto& p : csv_paths) ++stem_count[fs::path(p).stem().string()];

  std::vector<Series> reward, collision, success;
  for (const auto& p : csv_paths) {
    const std::vector<MetricsRow> rows = load_metrics(p);
    const fs::path path(p);
    std::string label = path.stem().string();
    if (stem_count[label] > 1 && path.has_parent_path()) {
      label = path.parent_path().filename().string() + "/" + label;
    }
    std::vector<double> x, r, c, s;
    for (const MetricsRow& row : rows) {
      x.push_back(static_cast<double>(row.env_step));
      r.push_back(row.avg_reward_per_step);
      c.push_back(row.collision);
      s.push_back(row.success);
    }
    reward.push_back({label, x, rolling_mean(r, window)});
    collision.push_back({label, x, rolling_mean(c, window)});
    success.push_back({label, x, rolling_mean(s, window)});
  }

  fs::create_directories(out_dir);
  const std::string smoothing = " (rolling " + std::to_string(window) + " episodes)";
  const std::vector<std::pair<std::string, std::string>> charts = {
      {"reward.svg", render_svg("Average reward per step" + smoothing, "environment steps",
                                "reward / step", reward)},
      {"collision_rate.svg", render_svg("Collision rate" + smoothing, "environment steps",
                                        "collision rate", collision)},
      {"success_rate.svg", render_svg("Success rate" + smoothing, "environment steps",
                                      "success rate", success)},
  };
  std::vector<std::string> written;
  for (const auto& [name, svg] : charts) {
    const std::string path = (fs::path(out_dir) / name).string();
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path);
    out << svg;
    written.push_back(path);
  }
  return written;
}

}  // namespace rlplan
