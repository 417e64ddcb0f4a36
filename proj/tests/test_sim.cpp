#include "scf/errors.hpp"
#include "scf/sim.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace scf;

namespace {

Scenario queue_scene(int n, double gap) {
  QueueSpec q;
  q.goal = Pose2(0.1, 0.1, 0.0);
  q.axis = {1.0, 0.0};
  q.gaps.assign(static_cast<std::size_t>(n), gap);
  q.lateral_devs.assign(static_cast<std::size_t>(n), 0.0);
  Scenario s;
  s.goal = q.goal;
  s.queue = q;
  return s;
}

std::string trace_text(const EpisodeTrace& t) {
  std::ostringstream o;
  write_trace(t, o);
  return o.str();
}

double axial_at(const EpisodeTrace& t, int tick) {
  double x = std::nan("");
  for (const auto& e : t.events)
    if (e.tick == tick) x = e.robot.x();
  return x;
}

}  // namespace

TEST_CASE("nearer person occludes a collinear farther one; its marker persists") {
  SimConfig cfg;
  Scenario s;
  s.goal = Pose2(-5.0, 0.0, 0.0);
  s.isolated_people = {Pose2(2.0, 0.0, 0.0), Pose2(3.5, 0.0, 0.0)};
  SimState st = initial_state(s, {0.0, 0.0});
  const auto vis = visible_people(st, cfg);
  REQUIRE(vis.size() == 1);
  CHECK(vis[0].position.x() == doctest::Approx(2.0));

  st.markers.push_back({{3.5, 0.0}, -10});
  update_markers(st, vis, cfg);
  REQUIRE(st.markers.size() == 2);
  bool far_kept = false;
  for (const auto& m : st.markers) far_kept |= std::abs(m.position.x() - 3.5) < 1e-12 && m.last_seen == -10;
  CHECK(far_kept);
}

TEST_CASE("a person who leaves while observed loses the marker the same tick") {
  SimConfig cfg;
  Scenario s;
  s.goal = Pose2(-5.0, 0.0, 0.0);
  s.isolated_people = {Pose2(2.0, 1.0, 0.0)};
  SimState st = initial_state(s, {0.0, 0.0});
  update_markers(st, visible_people(st, cfg), cfg);
  REQUIRE(st.markers.size() == 1);
  st.isolated[0] = Pose2(2.0, 2.5, 0.0);
  ++st.tick;
  update_markers(st, visible_people(st, cfg), cfg);
  REQUIRE(st.markers.size() == 1);
  CHECK(st.markers[0].position.y() == doctest::Approx(2.5));
  CHECK(st.markers[0].last_seen == 1);
}

TEST_CASE("a person outside the sensing radius never gets a marker") {
  SimConfig cfg;
  Scenario s;
  s.goal = Pose2(-5.0, 0.0, 0.0);
  s.isolated_people = {Pose2(cfg.sensing_radius + 0.5, 0.0, 0.0)};
  SimState st = initial_state(s, {0.0, 0.0});
  for (int t = 0; t < 5; ++t) {
    update_markers(st, visible_people(st, cfg), cfg);
    ++st.tick;
  }
  CHECK(st.markers.empty());
  CHECK(sensed_positions(st).empty());
}

TEST_CASE("occluded() ignores the target itself and the skipped id") {
  const std::vector<TruePerson> people{{1, {1.0, 0.0}, false}, {2, {2.0, 0.0}, false}};
  CHECK(occluded({0.0, 0.0}, {2.0, 0.0}, people, 2, 0.25));
  CHECK_FALSE(occluded({0.0, 0.0}, {1.0, 0.0}, people, 1, 0.25));
  CHECK_FALSE(occluded({0.0, 1.0}, {2.0, 1.0}, people, -1, 0.25));
}

TEST_CASE("empty scene: straight drive to the goal at constant speed") {
  SimConfig cfg;
  Scenario s;
  s.goal = Pose2(3.1, 0.1, 0.0);
  const Vec2 start(0.1, 0.1);
  const EpisodeTrace t = run_episode(s, start, cfg, NoSocialSource{});
  CHECK(t.outcome == Outcome::reached_goal);
  const int expected = static_cast<int>(std::ceil(3.0 / (cfg.robot_speed * cfg.tick) - 1e-9));
  CHECK(t.ticks == expected);
  CHECK(t.waits == 0);
  for (const auto& e : t.events) CHECK(std::abs(e.robot.y() - 0.1) < 1e-12);
}

TEST_CASE("robot behind a static queue waits instead of pushing through") {
  SimConfig cfg;
  const Scenario s = queue_scene(4, 1.0);
  const GroundTruthSource gt(cfg.label);
  SimState st = initial_state(s, {8.1, 0.1});
  EpisodeTrace t;
  const int first_service = static_cast<int>(std::lround(cfg.service_interval / cfg.tick));
  for (int i = 0; i < first_service; ++i) step(st, cfg, gt, t);
  REQUIRE(st.outcome == Outcome::running);
  CHECK(t.events.back().event == "wait");
  const Vec2 last = s.queue->people().back();
  CHECK((st.robot - last).norm() >= cfg.person_radius);
  CHECK(st.robot.x() > last.x());
  CHECK(t.waits > 10);
}

TEST_CASE("serving the front person moves the robot up one slot") {
  SimConfig cfg;
  const double gap = 1.0;
  const Scenario s = queue_scene(4, gap);
  const EpisodeTrace t = run_episode(s, {8.1, 0.1}, cfg, GroundTruthSource(cfg.label));
  const int period = static_cast<int>(std::lround(cfg.service_interval / cfg.tick));
  const double before = axial_at(t, period - 1);
  const double after = axial_at(t, 2 * period - 1);
  REQUIRE(std::isfinite(before));
  REQUIRE(std::isfinite(after));
  CHECK(before - after == doctest::Approx(gap).epsilon(0.25));
}

TEST_CASE("queue of four with the ground-truth stub: joins at the rear and is served last") {
  SimConfig cfg;
  const Scenario s = queue_scene(4, 1.0);
  for (const Vec2& start : {Vec2(8.1, 0.1), Vec2(-5.9, 0.1), Vec2(0.1, 6.1), Vec2(4.1, -5.9)}) {
    const EpisodeTrace t = run_episode(s, start, cfg, GroundTruthSource(cfg.label));
    CHECK(t.outcome == Outcome::reached_goal);
    CHECK(t.violation.empty());
    CHECK(t.services == 4);
    int last_service = -1, reached = -1;
    for (const auto& e : t.events) {
      if (e.event == "serviced") last_service = e.tick;
      if (e.event == "reached_goal") reached = e.tick;
      CHECK(e.event.rfind("violation", 0) != 0);
    }
    CHECK(reached > last_service);
  }
}

TEST_CASE("without a social layer the robot overtakes the queue") {
  SimConfig cfg;
  const Scenario s = queue_scene(4, 1.0);
  const EpisodeTrace t = run_episode(s, {8.1, 0.1}, cfg, NoSocialSource{});
  CHECK(t.outcome == Outcome::norm_violation);
  CHECK(t.violation == "overtake");
}

TEST_CASE("group scene: ground truth goes around, no social crosses the hull") {
  SimConfig cfg;
  Scenario s;
  s.goal = Pose2(5.1, 0.1, 0.0);
  GroupSpec g;
  g.members = {Pose2(2.5, 0.9, 0.0), Pose2(2.5, -0.7, 0.0)};
  s.groups.push_back(g);
  const Vec2 start(-1.9, 0.1);

  const EpisodeTrace with = run_episode(s, start, cfg, GroundTruthSource(cfg.label));
  CHECK(with.outcome == Outcome::reached_goal);
  for (const auto& e : with.events) CHECK(distance_to_group_hull(g, e.robot) > 0.0);

  const EpisodeTrace without = run_episode(s, start, cfg, NoSocialSource{});
  CHECK(without.outcome == Outcome::norm_violation);
  CHECK(without.violation == "group_label");
}

TEST_CASE("identical inputs give bit-identical traces") {
  SimConfig cfg;
  const Scenario s = queue_scene(4, 0.9);
  const EpisodeTrace a = run_episode(s, {7.3, 0.5}, cfg, GroundTruthSource(cfg.label));
  const EpisodeTrace b = run_episode(s, {7.3, 0.5}, cfg, GroundTruthSource(cfg.label));
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    CHECK(a.events[i].tick == b.events[i].tick);
    CHECK(a.events[i].robot.x() == b.events[i].robot.x());
    CHECK(a.events[i].robot.y() == b.events[i].robot.y());
    CHECK(a.events[i].event == b.events[i].event);
  }
  CHECK(trace_text(a) == trace_text(b));
}

TEST_CASE("unreachable goal reports no_path and times out") {
  SimConfig cfg;
  cfg.max_ticks = 30;
  Scenario s;
  s.goal = Pose2(3.1, 0.1, 0.0);
  s.isolated_people = {Pose2(3.1, 0.1, 0.0)};
  const EpisodeTrace t = run_episode(s, {0.1, 0.1}, cfg, NoSocialSource{});
  CHECK(t.outcome == Outcome::timeout);
  CHECK(t.ticks == 30);
  bool no_path = false;
  for (const auto& e : t.events) no_path |= e.event == "no_path";
  CHECK(no_path);
}

TEST_CASE("replan hook sees the sensed input and the fused field") {
  SimConfig cfg;
  const Scenario s = queue_scene(3, 1.0);
  int calls = 0;
  const EpisodeTrace t = run_episode(s, {7.1, 0.1}, cfg, GroundTruthSource(cfg.label),
                                     [&](const SimState& st, const SocialGridMap& in, const CostMap& social,
                                         const FusedCost& field) {
                                       ++calls;
                                       CHECK(in.spec == cfg.grid);
                                       CHECK(social.spec == cfg.grid);
                                       if (st.remaining_in_queue() > 0) CHECK(field.lethal.cast<int>().sum() > 0);
                                     });
  CHECK(calls == t.replans);
  CHECK(calls > 0);
}

TEST_CASE("sim config validation") {
  SimConfig cfg;
  cfg.sensing_radius = 20.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SimConfig{};
  cfg.tick = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  KeyValues kv = KeyValues::parse(SimConfig{}.to_text());
  const SimConfig back = SimConfig::from_keys(kv);
  CHECK_NOTHROW(kv.reject_unknown());
  CHECK(back.to_text() == SimConfig{}.to_text());
}
