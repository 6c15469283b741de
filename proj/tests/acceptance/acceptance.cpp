// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <CLI11.hpp>

#include <Eigen/Dense>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "rlplan/config.hpp"
#include "rlplan/frenet.hpp"
#include "rlplan/geometry.hpp"
#include "rlplan/harness.hpp"
#include "rlplan/neural.hpp"
#include "rlplan/targets.hpp"
#include "rlplan/uncertainty.hpp"
#include "support.hpp"
#include "target_fixture.hpp"

using namespace rlplan;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome quintic_boundaries() {
  const auto t0 = Clock::now();
  Rng rng(1001);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const BoundaryState a{uniform(rng, -50, 50), uniform(rng, -20, 20), uniform(rng, -5, 5)};
    const BoundaryState b{uniform(rng, -50, 50), uniform(rng, -20, 20), uniform(rng, -5, 5)};
    const double T = uniform(rng, 0.1, 8.0);
    const QuinticCoeffs q = quintic_coeffs(a, b, T);
    for (double r : {q.value(0.0) - a.p, q.velocity(0.0) - a.v, q.acceleration(0.0) - a.a,
                     q.value(T) - b.p, q.velocity(T) - b.v, q.acceleration(T) - b.a}) {
      worst = std::max(worst, std::abs(r));
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-9 && secs < 1.0, fmt("max residual %.3g (< 1e-9), %.4f s (< 1 s)", worst, secs)};
}

Outcome frenet_round_trip() {
  const auto t0 = Clock::now();
  Rng rng(1002);
  double worst = 0.0;
  for (int line_no = 0; line_no < 10; ++line_no) {
    std::vector<Point2> wp;
    if (line_no % 2 == 0) {
      const double amp = uniform(rng, 2.0, 10.0), wave = uniform(rng, 60.0, 150.0);
      for (int i = 0; i <= 300; ++i) wp.push_back({1.0 * i, amp * std::sin(2 * std::numbers::pi * i / wave)});
    } else {
      wp = arc_waypoints(uniform(rng, 30.0, 120.0), 0.0, uniform(rng, 1.0, 2.5), 400);
    }
    const ReferenceLine line = build_reference_line(wp);
    const double length = line.length();
    for (int i = 0; i < 100; ++i) {
      const FrenetState fs{uniform(rng, 0.05 * length, 0.95 * length), uniform(rng, 0.0, 15.0),
                           uniform(rng, -2, 2), uniform(rng, -4.0, 4.0), uniform(rng, -1, 1),
                           uniform(rng, -1, 1)};
      const Pose p = frenet_to_cartesian(line, fs);
      const Pose again = frenet_to_cartesian(line, cartesian_to_frenet(line, p));
      worst = std::max(worst, std::hypot(again.x - p.x, again.y - p.y));
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-6 && secs < 1.0, fmt("max position error %.3g m (< 1e-6), %.4f s (< 1 s)", worst, secs)};
}

Outcome covariance_propagation() {
  const NoiseModel model = NoiseModel::defaults(0.1);
  double worst = 0.0, min_eig = 1e300;
  bool monotone = true;
  for (ParticipantKind kind : {ParticipantKind::ego, ParticipantKind::other}) {
    const auto seq = propagate_sequence({}, model, kind, 30);
    Eigen::Matrix4d oracle = Eigen::Matrix4d::Zero();
    Eigen::Matrix4d fi = Eigen::Matrix4d::Identity();
    for (int i = 0; i < 30; ++i) {
      oracle += fi * model.process_noise(kind) * fi.transpose();
      fi = model.transition * fi;
    }
    worst = std::max(worst, (seq.back().m - oracle).cwiseAbs().maxCoeff());
    for (std::size_t k = 1; k < seq.size(); ++k) {
      monotone = monotone && seq[k].m.trace() > seq[k - 1].m.trace();
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(seq[k].m);
      min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
    }
  }
  const bool pass = worst < 1e-9 && min_eig >= 0.0 && monotone;
  return {pass, fmt("max deviation %.3g (< 1e-9), min eigenvalue %.3g, trace increasing: %s", worst,
                    min_eig, monotone ? "yes" : "no")};
}

Outcome minkowski_conservative() {
  Rng rng(1004);
  long outside = 0, sampled = 0;
  bool zero_exact = true;
  for (int pair = 0; pair < 100; ++pair) {
    const OrientedRect r = random_rect(rng, 5.0);
    const double a = uniform(rng, 0.0, 2.0);
    const Ellipse ell{a, uniform(rng, 0.0, a), uniform(rng, -3.0, 3.0)};
    const InflatedFootprint fp = minkowski_inflate(r, ell);
    const double ca = std::cos(r.heading), sa = std::sin(r.heading);
    const double ce = std::cos(ell.angle), se = std::sin(ell.angle);
    for (int i = 0; i < 10000; ++i) {
      double ex, ey;
      const double u = uniform(rng, -0.5, 0.5) * r.length, v = uniform(rng, -0.5, 0.5) * r.width;
      const double phi = uniform(rng, 0.0, 2 * std::numbers::pi);
      // a quarter of the samples sit on the ellipse boundary, the rest inside
      const double rho = i % 4 == 0 ? 1.0 : std::sqrt(uniform(rng, 0.0, 1.0));
      ex = ell.a * rho * std::cos(phi);
      ey = ell.b * rho * std::sin(phi);
      const Point2 p{r.cx + u * ca - v * sa + ex * ce - ey * se, r.cy + u * sa + v * ca + ex * se + ey * ce};
      ++sampled;
      if (!convex_contains(fp.vertices, p, 1e-9)) ++outside;
    }
    const InflatedFootprint plain = minkowski_inflate(r, {});
    const auto c = corners(r);
    zero_exact = zero_exact && plain.vertices.size() == 4;
    for (std::size_t k = 0; zero_exact && k < 4; ++k) {
      zero_exact = plain.vertices[k].x == c[k].x && plain.vertices[k].y == c[k].y;
    }
  }
  return {outside == 0 && zero_exact,
          fmt("%ld of %ld sampled points outside, zero ellipse bitwise rectangle: %s", outside, sampled,
              zero_exact ? "yes" : "no")};
}

Outcome gradient_check() {
  Rng rng(1005);
  const double h = 1e-6;
  double worst = 0.0;
  long checked = 0;
  for (int net = 0; net < 20; ++net) {
    std::vector<int> sizes{uniform_int(rng, 1, 6)};
    const int hidden = uniform_int(rng, 1, 3);
    for (int i = 0; i < hidden; ++i) sizes.push_back(uniform_int(rng, 2, 8));
    sizes.push_back(uniform_int(rng, 1, 3));
    const auto act = net % 2 ? OutputActivation::tanh : OutputActivation::identity;
    const MlpParams p = MlpParams::init(sizes, act, rng, 0.5);
    const int batch = uniform_int(rng, 1, 4);
    Eigen::MatrixXd x(sizes.front(), batch), w(sizes.back(), batch);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = uniform(rng, -1.0, 1.0);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = uniform(rng, -1.0, 1.0);
    auto loss = [&](const MlpParams& q) { return (forward(q, x, nullptr).array() * w.array()).sum(); };

    ForwardCache cache;
    forward(p, x, &cache);
    const BackwardResult br = backward(p, cache, w);
    auto compare = [&](double analytic, double numeric) {
      worst = std::max(worst, std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric)));
      ++checked;
    };
    for (std::size_t l = 0; l < p.layer_count(); ++l) {
      for (Eigen::Index k = 0; k < p.weights[l].size(); ++k) {
        MlpParams up = p, down = p;
        up.weights[l].data()[k] += h;
        down.weights[l].data()[k] -= h;
        compare(br.grads.weights[l].data()[k], (loss(up) - loss(down)) / (2 * h));
      }
      for (Eigen::Index k = 0; k < p.biases[l].size(); ++k) {
        MlpParams up = p, down = p;
        up.biases[l](k) += h;
        down.biases[l](k) -= h;
        compare(br.grads.biases[l](k), (loss(up) - loss(down)) / (2 * h));
      }
    }
  }
  return {worst < 1e-4, fmt("%ld parameters, worst relative error %.3g (< 1e-4)", checked, worst)};
}

TargetSpec spec_for(TargetStrategy s, double horizon) {
  TargetSpec spec;
  spec.strategy = s;
  spec.horizon = horizon;
  return spec;
}

Outcome target_reductions() {
  Rng rng(1006);
  const NoiseModel noise = NoiseModel::defaults(0.1);
  StateCovariance e0, o0;
  e0.m.diagonal() << 0.01, 0.01, 0.04, 0.04;
  o0.m.diagonal() << 0.04, 0.04, 0.09, 0.09;
  double worst_td = 0.0;
  for (int i = 0; i < 100; ++i) {
    const WorldState w = random_quiet_world(rng);
    const ReplayTransition tr = make_transition(w, random_action(rng), 0.1, e0, o0);
    const FrozenNets nets(static_cast<int>(tr.obs.features.size()), rng);
    const Bootstrap b = nets.bootstrap();
    const double td = td1_target(tr, b, spec_for(TargetStrategy::td1, 0.1));
    worst_td = std::max({worst_td, std::abs(rp_target(tr, b, spec_for(TargetStrategy::rp, 0.1)) - td),
                         std::abs(irp_target(tr, b, spec_for(TargetStrategy::irp, 0.1)) - td),
                         std::abs(irp_up_target(tr, b, spec_for(TargetStrategy::irp_up, 0.1), noise) - td)});
  }

  // unit reward every step, zero value at the horizon
  WorldConfig cfg;
  cfg.tracking_sigma_pos = cfg.tracking_sigma_speed = 0.0;
  cfg.lane_change_rate = 0.0;
  cfg.reward = RewardWeights{0, 0, 0, 0, 0, 0, -10.0, 1.0};
  ScenarioSpec sc = scenario_spec(1);
  sc.min_static = sc.max_static = 0;
  WorldState w = spawn_scenario(sc, 2, cfg);
  w.av.frenet.d = w.av.frenet.d_d = w.av.frenet.d_dd = 0.0;
  GoalAction cruise{4.0, 0.0, 4.0 * w.av.frenet.s_d, w.av.frenet.s_d};
  const Eigen::VectorXd a = normalize_goal(cruise);
  Bootstrap zero;
  zero.policy = [a](const Eigen::MatrixXd& obs) { return Eigen::MatrixXd(a.replicate(1, obs.cols())); };
  zero.value = [](const Eigen::MatrixXd& obs, const Eigen::MatrixXd&) {
    return Eigen::VectorXd::Zero(obs.cols());
  };
  double worst_geo = 0.0;
  for (double horizon : {0.1, 0.5, 1.0, 2.0, 3.0}) {
    const ReplayTransition tr = make_transition(w, a, horizon);
    double expect = 0.0, g = 1.0;
    for (std::size_t i = 0; i < horizon_steps(0.1, horizon); ++i, g *= 0.99) expect += g;
    const std::vector<const ReplayTransition*> one{&tr};
    for (auto s : {TargetStrategy::rp, TargetStrategy::irp, TargetStrategy::irp_up}) {
      worst_geo = std::max(worst_geo, std::abs(compute_targets(one, zero, spec_for(s, horizon), &noise)[0] - expect));
    }
  }
  return {worst_td <= 1e-12 && worst_geo <= 1e-12,
          fmt("one-step max |y - td1| %.3g (<= 1e-12), geometric sum max error %.3g (<= 1e-12)", worst_td,
              worst_geo)};
}

Outcome irp_oracle() {
  Rng rng(1007);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const WorldState w = random_quiet_world(rng);
    const Eigen::VectorXd a = random_action(rng);
    const ReplayTransition tr = make_transition(w, a, 3.0);
    const FrozenNets nets(static_cast<int>(tr.obs.features.size()), rng);
    const TargetSpec spec = spec_for(TargetStrategy::irp, 3.0);
    worst = std::max(worst, std::abs(irp_target(tr, nets.bootstrap(), spec) - closed_loop_return(w, a, nets, spec)));
  }
  return {worst < 1e-6, fmt("100 transitions, max |irp - realized return| %.3g (< 1e-6)", worst)};
}

Outcome up_reduction() {
  Rng rng(1008);
  const NoiseModel zero = NoiseModel::constant_velocity(0.1, Eigen::Vector4d::Zero(), Eigen::Vector4d::Zero());
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const WorldState w = random_quiet_world(rng);
    const ReplayTransition tr = make_transition(w, random_action(rng), 3.0);
    const FrozenNets nets(static_cast<int>(tr.obs.features.size()), rng);
    const double up = irp_up_target(tr, nets.bootstrap(), spec_for(TargetStrategy::irp_up, 3.0), zero);
    const double irp = irp_target(tr, nets.bootstrap(), spec_for(TargetStrategy::irp, 3.0));
    worst = std::max(worst, std::abs(up - irp));
  }
  return {worst <= 1e-12, fmt("100 transitions, max |irp_up - irp| %.3g (<= 1e-12)", worst)};
}

struct RunResult {
  double roll_success = 0.0;
  double roll_collision = 0.0;
  double seconds = 0.0;
};

Outcome ordering_experiment(const std::string& config_path, const fs::path& work) {
  const std::array<Method, 5> methods{Method::baseline1, Method::baseline2, Method::rp, Method::irp,
                                      Method::irp_up};
  const int seeds = 5;
  std::map<Method, std::vector<RunResult>> results;
  const auto t0 = Clock::now();
  for (int seed = 0; seed < seeds; ++seed) {
    for (Method m : methods) {
      RunConfig cfg;
      apply_config_file(cfg, config_path);
      cfg.method = m;
      cfg.seed = static_cast<std::uint64_t>(seed);
      cfg.out_dir = (work / "ordering" / to_string(m) / std::to_string(seed)).string();
      const auto r0 = Clock::now();
      const TrainingSummary s = run_training(cfg);
      RunResult r;
      r.roll_success = s.rows.back().roll_success_rate;
      r.roll_collision = s.rows.back().roll_collision_rate;
      r.seconds = seconds_since(r0);
      results[m].push_back(r);
      std::printf("  run %-9s seed %d: final rolling success %.2f, collision %.2f, %.0f s\n", to_string(m),
                  seed, r.roll_success, r.roll_collision, r.seconds);
      std::fflush(stdout);
    }
  }
  const double hours = seconds_since(t0) / 3600.0;

  auto mean = [&](Method m, double RunResult::*field) {
    double sum = 0.0;
    for (const RunResult& r : results[m]) sum += r.*field;
    return sum / seeds;
  };
  for (Method m : methods) {
    std::printf("  %-9s mean final rolling success %.3f, collision %.3f\n", to_string(m),
                mean(m, &RunResult::roll_success), mean(m, &RunResult::roll_collision));
  }

  bool pass = hours < 2.0;
  std::string detail;
  const std::array<std::pair<Method, Method>, 4> pairs{{{Method::irp_up, Method::irp},
                                                        {Method::irp, Method::rp},
                                                        {Method::rp, Method::baseline2},
                                                        {Method::baseline2, Method::baseline1}}};
  for (const auto& [hi, lo] : pairs) {
    int wins = 0;
    for (int s = 0; s < seeds; ++s) wins += results[hi][s].roll_success >= results[lo][s].roll_success;
    pass = pass && wins >= 4;
    detail += fmt("%s>=%s in %d/5, ", to_string(hi), to_string(lo), wins);
  }
  const double c_up = mean(Method::irp_up, &RunResult::roll_collision);
  const double c_b2 = mean(Method::baseline2, &RunResult::roll_collision);
  const double reduction = c_b2 > 0.0 ? 1.0 - c_up / c_b2 : 0.0;
  pass = pass && c_b2 > 0.0 && reduction >= 0.30;
  detail += fmt("collision irp_up %.3f vs baseline2 %.3f (%.0f%% lower, need >= 30%%), %.2f h (< 2 h)", c_up,
                c_b2, 100.0 * reduction, hours);
  return {pass, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const std::string& cli, const std::string& config_path, const fs::path& work) {
  int identical = 0, total = 0;
  std::string detail;
  for (const char* method : {"baseline1", "baseline2", "rp", "irp", "irp_up"}) {
    std::array<std::string, 2> bytes;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = work / "determinism" / method / std::to_string(rep);
      fs::remove_all(out);
      const std::string cmd = "\"" + cli + "\" train --config \"" + config_path + "\" --method " + method +
                              " --seed 11 --steps 8000 --out \"" + out.string() + "\" --quiet";
      if (std::system(cmd.c_str()) != 0) return {false, std::string("train failed for ") + method};
      bytes[static_cast<std::size_t>(rep)] = slurp(out / "metrics.csv");
    }
    ++total;
    const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
    identical += same;
    if (!same) detail += std::string(method) + " differs; ";
  }
  detail += fmt("%d/%d methods byte-identical across repeated train invocations", identical, total);
  return {identical == total, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string cli, config_path, work_dir = (fs::temp_directory_path() / "rlplan_acceptance").string();
  bool skip_training = false;
  app.add_option("--cli", cli, "path to the rlplan executable")->required();
  app.add_option("--config", config_path, "desk experiment configuration")->required();
  app.add_option("--work", work_dir, "scratch directory for training runs");
  app.add_flag("--skip-training", skip_training, "only run the fast checks (reports the rest as not run)");
  CLI11_PARSE(app, argc, argv);
  const fs::path work(work_dir);
  fs::create_directories(work);

  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    bool training;
  };
  const std::vector<Criterion> criteria{
      {"quintic boundary conditions", quintic_boundaries, false},
      {"frenet round trip", frenet_round_trip, false},
      {"covariance propagation", covariance_propagation, false},
      {"minkowski conservativeness", minkowski_conservative, false},
      {"gradient check", gradient_check, false},
      {"target reductions", target_reductions, false},
      {"irp oracle equivalence", irp_oracle, false},
      {"uncertainty reduction", up_reduction, false},
      {"determinism", [&] { return determinism(cli, config_path, work); }, true},
      {"desk ordering experiment", [&] { return ordering_experiment(config_path, work); }, true},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (c.training && skip_training) {
      std::printf("FAIL %s: not run (--skip-training)\n", c.name);
      ++failed;
      continue;
    }
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
