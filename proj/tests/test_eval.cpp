#include "scf/errors.hpp"
#include "scf/eval.hpp"

#include <doctest.h>

#include <cstdlib>
#include <sstream>

using namespace scf;

namespace {

EvalConfig queue_config(std::uint64_t samples) {
  EvalConfig c;
  c.samples = samples;
  c.generator.seed = 41;
  c.generator.people_in_queue = {2, 15};
  c.generator.number_of_groups = {0, 0};
  c.generator.p_goal_only = 0.0;
  c.generator.p_isolated = 0.0;
  return c;
}

EvalConfig group_config(std::uint64_t samples) {
  EvalConfig c;
  c.samples = samples;
  c.generator.seed = 42;
  c.generator.people_in_queue = {0, 0};
  c.generator.number_of_groups = {1, 5};
  c.generator.people_in_group = {2, 7};
  c.generator.p_goal_only = 0.0;
  c.generator.p_isolated = 0.0;
  return c;
}

CostMap ones(const GridSpec& spec) {
  CostMap m(spec);
  m.values.setConstant(1.0f);
  return m;
}

}  // namespace

TEST_CASE("ground-truth prediction succeeds from every bearing") {
  const EvalConfig cfg = queue_config(30);
  for (std::uint64_t i = 0; i < cfg.samples; ++i) {
    const Scenario s = sample_scenario_at(cfg.generator, i);
    const CostMap gt = render_label(s, cfg.generator.grid, cfg.generator.label);
    for (Bearing b : kBearings) {
      for (int side : {-1, 1}) {
        const Judgment j = judge_static(gt, s, b, side, cfg);
        CHECK(j.success);
        CHECK(j.reason == Reason::ok);
        REQUIRE(j.path);
      }
    }
  }
}

TEST_CASE("zero prediction from the front cuts the queue") {
  const EvalConfig cfg = queue_config(20);
  int cuts = 0;
  for (std::uint64_t i = 0; i < cfg.samples; ++i) {
    const Scenario s = sample_scenario_at(cfg.generator, i);
    const Judgment j = judge_static(CostMap(cfg.generator.grid), s, Bearing::front, 1, cfg);
    CHECK_FALSE(j.success);
    cuts += j.reason == Reason::queue_cut ? 1 : 0;
  }
  CHECK(cuts == 20);
}

TEST_CASE("all-ones prediction has no path") {
  const EvalConfig cfg = queue_config(5);
  for (std::uint64_t i = 0; i < cfg.samples; ++i) {
    const Scenario s = sample_scenario_at(cfg.generator, i);
    const Judgment j = judge_static(ones(cfg.generator.grid), s, Bearing::side, -1, cfg);
    CHECK_FALSE(j.success);
    CHECK(j.reason == Reason::no_path);
    CHECK_FALSE(j.path);
  }
}

TEST_CASE("zero prediction through a group is group_crossed") {
  EvalConfig cfg = group_config(1);
  Scenario s;
  s.goal = Pose2(4.1, 0.1, 0.0);
  GroupSpec g;
  g.members = {Pose2(0.1, 1.1, 0.0), Pose2(0.1, -0.9, 0.0)};
  s.groups.push_back(g);
  const auto start = world_to_cell(Vec2(-3.9, 0.1), cfg.generator.grid);
  REQUIRE(start);
  const Judgment without = judge_static(CostMap(cfg.generator.grid), s, *start, cfg);
  CHECK(without.reason == Reason::group_crossed);
  const Judgment with = judge_static(render_label(s, cfg.generator.grid, cfg.generator.label), s, *start, cfg);
  CHECK(with.reason == Reason::ok);
}

TEST_CASE("ablation contrast on queue scenarios from the front") {
  EvalConfig cfg = queue_config(40);
  cfg.fixed_bearing = Bearing::front;
  const auto records = ablation(ground_truth_predictor(cfg.generator.label), cfg);
  REQUIRE(records.size() == 40);
  int with_ok = 0, without_cut = 0;
  for (const auto& r : records) {
    with_ok += r.with_social.reason == Reason::ok ? 1 : 0;
    without_cut += r.without_social.reason == Reason::queue_cut ? 1 : 0;
  }
  CHECK(with_ok == 40);
  CHECK(without_cut >= 36);
}

TEST_CASE("empty scenario is ok with and without social costs") {
  EvalConfig cfg = queue_config(1);
  Scenario s;
  s.goal = Pose2(2.1, 2.1, 0.0);
  const auto start = world_to_cell(Vec2(-5.9, -1.9), cfg.generator.grid);
  REQUIRE(start);
  CHECK(judge_static(CostMap(cfg.generator.grid), s, *start, cfg).reason == Reason::ok);
  CHECK(judge_static(render_label(s, cfg.generator.grid, cfg.generator.label), s, *start, cfg).reason == Reason::ok);
}

TEST_CASE("bearing starts sit at the requested distance") {
  const EvalConfig cfg = queue_config(1);
  const Scenario s = sample_scenario_at(cfg.generator, 3);
  const Vec2 goal = s.goal.position();
  const Vec2 axis = scenario_axis(s);
  const Vec2 front = bearing_start(s, Bearing::front, 8.0, 2.0, 1);
  const Vec2 side = bearing_start(s, Bearing::side, 8.0, 2.0, -1);
  const Vec2 rear = bearing_start(s, Bearing::rear, 8.0, 2.0, 1);
  CHECK((front - goal).norm() == doctest::Approx(8.0));
  CHECK((front - goal).dot(axis) == doctest::Approx(-8.0));
  CHECK((side - goal).norm() == doctest::Approx(8.0));
  CHECK(std::abs((side - goal).dot(axis)) < 1e-9);
  CHECK((rear - goal).dot(axis) >= std::max(8.0, s.queue->rear_axial() + 2.0) - 1e-9);
}

TEST_CASE("judge_static rejects a mismatched prediction grid") {
  const EvalConfig cfg = queue_config(1);
  const Scenario s = sample_scenario_at(cfg.generator, 0);
  GridSpec other;
  other.cells_x = 60;
  CHECK_THROWS_AS(judge_static(CostMap(other), s, Bearing::front, 1, cfg), std::invalid_argument);
}

TEST_CASE("run_table is independent of the worker count") {
  EvalConfig cfg = queue_config(24);
  const Predictor zero = zero_predictor();
  setenv("SCF_THREADS", "1", 1);
  const TableResult a = run_table(zero, cfg);
  setenv("SCF_THREADS", "4", 1);
  const TableResult b = run_table(zero, cfg);
  unsetenv("SCF_THREADS");
  std::ostringstream ra, rb;
  write_records(a, ra);
  write_records(b, rb);
  CHECK(ra.str() == rb.str());
  CHECK(a.histogram == b.histogram);
}

TEST_CASE("random bearings cover all three directions") {
  const TableResult r = run_table(ground_truth_predictor(LabelGeometry{}), queue_config(60));
  int counts[3] = {};
  for (const auto& rec : r.records) ++counts[static_cast<int>(rec.bearing)];
  for (int c : counts) CHECK(c > 5);
  CHECK(r.success_rate() == 1.0);
}

TEST_CASE("summary carries the table columns and a success rate") {
  EvalConfig cfg = group_config(10);
  cfg.name = "groups_only";
  const TableResult r = run_table(ground_truth_predictor(cfg.generator.label), cfg);
  std::ostringstream out;
  write_summary(r, cfg, out);
  const std::string text = out.str();
  CHECK(text.find("dataset: groups_only\n") != std::string::npos);
  CHECK(text.find("samples: 10\n") != std::string::npos);
  CHECK(text.find("people_in_queue: none\n") != std::string::npos);
  CHECK(text.find("people_in_group: 2..7\n") != std::string::npos);
  CHECK(text.find("number_of_groups: 1..5\n") != std::string::npos);
  CHECK(text.find("success_rate: 1.0000\n") != std::string::npos);
  CHECK(text.find("reason_ok: 10\n") != std::string::npos);
}

TEST_CASE("limitation sweep sets deviation and spacing ranges") {
  EvalConfig cfg = queue_config(10);
  const auto pts = limitation_sweep(zero_predictor(), SweepAxis::spacing, {0.8, 1.2}, cfg);
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].value == 0.8);
  CHECK(pts[1].value == 1.2);
  const auto gt = limitation_sweep(ground_truth_predictor(cfg.generator.label), SweepAxis::lateral_deviation,
                                   {0.25, 0.5}, cfg);
  for (const auto& p : gt) CHECK(p.success_rate == 1.0);
}

TEST_CASE("eval config keys and validation") {
  KeyValues kv = KeyValues::parse("samples = 7\nbearing = side\nname = x\npeople_in_queue = 2..9\n");
  const EvalConfig c = EvalConfig::from_keys(kv);
  CHECK_NOTHROW(kv.reject_unknown());
  CHECK(c.samples == 7);
  REQUIRE(c.fixed_bearing);
  CHECK(*c.fixed_bearing == Bearing::side);
  KeyValues bad = KeyValues::parse("bearing = up\n");
  CHECK_THROWS_AS(EvalConfig::from_keys(bad), ConfigError);
  EvalConfig zero = c;
  zero.samples = 0;
  CHECK_THROWS_AS(zero.validate(), ConfigError);
  KeyValues again = KeyValues::parse(c.to_text());
  CHECK(EvalConfig::from_keys(again).to_text() == c.to_text());
}
