#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rlplan/config.hpp"
#include "rlplan/error.hpp"
#include "rlplan/harness.hpp"
#include "rlplan/metrics.hpp"
#include "rlplan/plot.hpp"

using namespace rlplan;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rlplan_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void expect_code(ErrorCode code, const std::function<void()>& f) {
  try {
    f();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

RunConfig tiny_run(Method m, const fs::path& out) {
  RunConfig cfg;
  cfg.method = m;
  cfg.seed = 3;
  cfg.total_env_steps = 2000;
  cfg.eval_every = 1000;
  cfg.eval_episodes = 2;
  cfg.out_dir = out.string();
  cfg.agent.hidden = {16, 16};
  cfg.agent.batch_size = 16;
  cfg.agent.warmup_steps = 200;
  cfg.agent.update_every = 2;
  cfg.world.horizon = 1.0;
  return cfg;
}

}  // namespace

TEST_CASE("config text round trip") {
  RunConfig cfg;
  apply_config_text(cfg,
                    "# comment\n"
                    "scenario = 3\n"
                    "method = irp_up   # trailing comment\n"
                    "seed = 12\n"
                    "agent.hidden = 64,32\n"
                    "agent.gamma = 0.95\n"
                    "noise.ego_std = 0.1, 0.1, 0.2, 0.2\n"
                    "world.horizon = 2.0\n"
                    "reward.collision_hit = -5\n"
                    "scenario.max_dynamic = 2\n",
                    "inline");
  CHECK(cfg.scenario_id == 3);
  CHECK(cfg.method == Method::irp_up);
  CHECK(cfg.seed == 12);
  CHECK(cfg.agent.hidden == std::vector<int>{64, 32});
  CHECK(cfg.agent.gamma == 0.95);
  CHECK(cfg.noise.ego_std == std::vector<double>{0.1, 0.1, 0.2, 0.2});
  CHECK(cfg.world.reward.collision_hit == -5.0);
  CHECK(resolved_scenario(cfg).max_dynamic == 2);
  CHECK(target_spec(cfg).horizon == 2.0);
  CHECK(target_spec(cfg).strategy == TargetStrategy::irp_up);

  const std::string dumped = dump_config(cfg);
  RunConfig again;
  apply_config_text(again, dumped, "dump");
  CHECK(dump_config(again) == dumped);
  CHECK(dump_config(RunConfig{}) != dumped);
}

TEST_CASE("shipped configs parse") {
  RunConfig ref;
  apply_config_file(ref, std::string(RLPLAN_SOURCE_DIR) + "/configs/reference.cfg");
  CHECK(dump_config(ref) == dump_config(RunConfig{}));
  RunConfig desk;
  apply_config_file(desk, std::string(RLPLAN_SOURCE_DIR) + "/configs/desk_scenario1.cfg");
  CHECK_NOTHROW(validate(desk));
  CHECK(desk.total_env_steps == 50000);
}

TEST_CASE("config errors name the line") {
  RunConfig cfg;
  try {
    apply_config_text(cfg, "seed = 1\nno_such_key = 4\n", "bad.cfg");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_config);
    CHECK(std::string(e.what()).find("bad.cfg:2") != std::string::npos);
  }
  expect_code(ErrorCode::invalid_config, [&] { apply_config_text(cfg, "seed = abc\n", "x"); });
  expect_code(ErrorCode::invalid_config, [&] { apply_config_text(cfg, "just words\n", "x"); });
  expect_code(ErrorCode::invalid_config, [&] { apply_setting(cfg, "method", "qlearning"); });

  RunConfig bad;
  bad.eval_episodes = 0;
  expect_code(ErrorCode::invalid_config, [&] { validate(bad); });
  bad = {};
  bad.world.horizon = 0.25;
  expect_code(ErrorCode::invalid_config, [&] { validate(bad); });
  bad = {};
  bad.scenario_id = 9;
  expect_code(ErrorCode::unknown_scenario, [&] { validate(bad); });
  bad = {};
  bad.noise.ego_std = {0.1, 0.1};
  expect_code(ErrorCode::invalid_config, [&] { validate(bad); });
  CHECK_NOTHROW(validate(RunConfig{}));
}

TEST_CASE("methods map to strategies") {
  CHECK(strategy_for(Method::baseline1) == TargetStrategy::td1);
  CHECK(strategy_for(Method::baseline2) == TargetStrategy::td1);
  CHECK(strategy_for(Method::rp) == TargetStrategy::rp);
  CHECK(strategy_for(Method::irp) == TargetStrategy::irp);
  CHECK(strategy_for(Method::irp_up) == TargetStrategy::irp_up);
  CHECK_FALSE(uses_goal_actions(Method::baseline1));
  CHECK(uses_goal_actions(Method::baseline2));
  CHECK(parse_method("rp") == Method::rp);
}

TEST_CASE("metrics rows and consistency checks") {
  RollingRates r(3);
  r.push(1, 0);
  r.push(0, 1);
  CHECK(r.collision_rate() == doctest::Approx(0.5));
  r.push(0, 1);
  r.push(0, 1);
  CHECK(r.collision_rate() == 0.0);
  CHECK(r.success_rate() == 1.0);

  const std::string good = std::string(kMetricsHeader) +
                           "\n0,10,0.1,1,0,10,1.0000,0.0000\n1,25,0.2,0,1,15,0.5000,0.5000\n";
  const auto rows = parse_metrics(good, "m.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].env_step == 25);
  CHECK(rows[1].roll_success_rate == 0.5);

  auto error_line = [](const std::string& text) {
    try {
      parse_metrics(text, "m.csv");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::malformed_csv);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(error_line(std::string(kMetricsHeader) + "\n").find("line 2") != std::string::npos);
  CHECK(error_line("").find("line 1") != std::string::npos);
  const std::string wrong_rate = std::string(kMetricsHeader) +
                                 "\n0,10,0.1,1,0,10,1.0000,0.0000\n1,25,0.2,0,1,15,0.5000,0.0000\n";
  CHECK(error_line(wrong_rate).find("line 3") != std::string::npos);
  const std::string short_row = std::string(kMetricsHeader) + "\n0,10,0.1,1\n";
  CHECK(error_line(short_row).find("line 2") != std::string::npos);
  const std::string bad_flag = std::string(kMetricsHeader) + "\n0,10,0.1,2,0,10,1.0000,0.0000\n";
  CHECK(error_line(bad_flag).find("line 2") != std::string::npos);

  MetricsRow row{4, 100, -0.25, 0, 1, 20, 0.1, 0.9};
  CHECK(format_row(row) == "4,100,-0.250000,0,1,20,0.1000,0.9000");
}

TEST_CASE("plots carry one series per file") {
  const fs::path dir = scratch("plots");
  std::vector<std::string> files;
  for (const char* name : {"baseline1", "baseline2", "rp", "irp", "irp_up"}) {
    std::ofstream out(dir / (std::string(name) + ".csv"));
    out << kMetricsHeader << "\n";
    RollingRates rr;
    for (int i = 0; i < 30; ++i) {
      const int c = i % 4 == 0, s = i % 3 == 0 && !c;
      rr.push(c, s);
      out << format_row({i, 50L * (i + 1), -0.01 * i, c, s, 50, rr.collision_rate(), rr.success_rate()})
          << "\n";
    }
    files.push_back((dir / (std::string(name) + ".csv")).string());
  }
  const auto single = emit_plots({files[0]}, (dir / "one").string());
  REQUIRE(single.size() == 3);
  for (const auto& p : single) {
    const std::string svg = slurp(p);
    std::size_t count = 0;
    for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++count;
    CHECK(count == 1);
  }
  const auto all = emit_plots(files, (dir / "all").string());
  for (const auto& p : all) {
    const std::string svg = slurp(p);
    for (const char* name : {"baseline1", "baseline2", "rp", "irp", "irp_up"}) {
      CHECK(svg.find(std::string(">") + name + "<") != std::string::npos);
    }
  }
  {
    std::ofstream out(dir / "empty.csv");
    out << kMetricsHeader << "\n";
  }
  try {
    emit_plots({(dir / "empty.csv").string()}, (dir / "bad").string());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::malformed_csv);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK(rolling_mean({1, 2, 3, 4}, 2) == std::vector<double>{1, 1.5, 2.5, 3.5});
  fs::remove_all(dir);
}

TEST_CASE("training runs are byte reproducible") {
  for (Method m : {Method::baseline1, Method::irp_up}) {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    const TrainingSummary sa = run_training(tiny_run(m, a));
    run_training(tiny_run(m, b));
    CHECK(!sa.rows.empty());
    CHECK(slurp(a / "metrics.csv") == slurp(b / "metrics.csv"));
    CHECK(slurp(a / "eval.csv") == slurp(b / "eval.csv"));
    CHECK(fs::exists(sa.best_checkpoint));
    CHECK(fs::exists(sa.final_checkpoint));
    CHECK_NOTHROW(load_metrics((a / "metrics.csv").string()));

    RunConfig other = tiny_run(m, b);
    other.seed = 4;
    run_training(other);
    CHECK(slurp(a / "metrics.csv") != slurp(b / "metrics.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
  }
}

TEST_CASE("evaluation is repeatable and survives a checkpoint round trip") {
  const fs::path dir = scratch("eval");
  RunConfig cfg = tiny_run(Method::baseline2, dir);
  const TrainingSummary s = run_training(cfg);
  const EvalAggregate a = run_eval(cfg, s.final_checkpoint);
  const EvalAggregate b = run_eval(cfg, s.final_checkpoint);
  CHECK(a == b);
  CHECK(a.episodes == cfg.eval_episodes);
  const EvalAggregate c = run_eval(cfg, load_mlp(s.final_checkpoint));
  CHECK(a == c);

  RunConfig none = cfg;
  none.eval_episodes = 0;
  expect_code(ErrorCode::invalid_config, [&] { run_eval(none, s.final_checkpoint); });

  {
    std::ofstream out(dir / "junk.bin", std::ios::binary);
    out << "not a network";
  }
  expect_code(ErrorCode::corrupt_checkpoint, [&] { run_eval(cfg, (dir / "junk.bin").string()); });

  RunConfig control = cfg;
  control.method = Method::baseline1;
  expect_code(ErrorCode::shape_mismatch, [&] { run_eval(control, s.final_checkpoint); });
  fs::remove_all(dir);
}
