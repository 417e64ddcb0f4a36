#include "scf/sim.hpp"

#include "scf/errors.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace scf {

void SimConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("sim config: ") + name + " must be positive");
  };
  positive(tick, "tick");
  positive(robot_speed, "robot_speed");
  positive(sensing_radius, "sensing_radius");
  positive(service_interval, "service_interval");
  positive(person_radius, "person_radius");
  positive(marker_match, "marker_match");
  positive(follow_distance, "follow_distance");
  positive(corridor_width, "corridor_width");
  positive(follow_lookahead, "follow_lookahead");
  positive(lane_half_width, "lane_half_width");
  if (replan_period < 1) throw ConfigError("sim config: replan_period must be >= 1");
  if (max_ticks < 1) throw ConfigError("sim config: max_ticks must be >= 1");
  if (!grid.valid()) throw ConfigError("sim config: invalid grid");
  if (sensing_radius > 0.5 * std::min(grid.extent_x(), grid.extent_y()))
    throw ConfigError("sim config: sensing_radius exceeds the map half-extent");
  if (!(fusion.kappa > 0.0) || !(fusion.lethal_frac > 0.0 && fusion.lethal_frac <= 1.0))
    throw ConfigError("sim config: kappa must be positive and lethal_frac in (0, 1]");
}

SimConfig SimConfig::from_keys(KeyValues& kv) {
  SimConfig c;
  c.tick = kv.get_double("tick", c.tick);
  c.robot_speed = kv.get_double("robot_speed", c.robot_speed);
  c.sensing_radius = kv.get_double("sensing_radius", c.sensing_radius);
  c.service_interval = kv.get_double("service_interval", c.service_interval);
  c.person_radius = kv.get_double("person_radius", c.person_radius);
  c.replan_period = kv.get_int("replan_period", c.replan_period);
  c.max_ticks = kv.get_int("max_ticks", c.max_ticks);
  c.grid.cells_x = kv.get_int("cells_x", c.grid.cells_x);
  c.grid.cells_y = kv.get_int("cells_y", c.grid.cells_y);
  c.grid.resolution = kv.get_double("resolution", c.grid.resolution);
  c.fusion.kappa = kv.get_double("kappa", c.fusion.kappa);
  c.fusion.lethal_frac = kv.get_double("lethal_frac", c.fusion.lethal_frac);
  c.goal_radius = kv.get_double("goal_radius", c.goal_radius);
  c.marker_match = kv.get_double("marker_match", c.marker_match);
  c.follow_lookahead = kv.get_double("follow_lookahead", c.follow_lookahead);
  c.corridor_width = kv.get_double("corridor_width", c.corridor_width);
  c.follow_distance = kv.get_double("follow_distance", c.follow_distance);
  c.lane_half_width = kv.get_double("lane_half_width", c.lane_half_width);
  c.label.wall_lateral_offset = kv.get_double("wall_lateral_offset", c.label.wall_lateral_offset);
  c.label.wall_thickness = kv.get_double("wall_thickness", c.label.wall_thickness);
  c.label.front_cap_extension = kv.get_double("front_cap_extension", c.label.front_cap_extension);
  c.label.group_dilation = kv.get_double("group_dilation", c.label.group_dilation);
  return c;
}

std::string SimConfig::to_text() const {
  std::ostringstream o;
  auto d = [](double v) { return format_double(v); };
  o << "tick = " << d(tick) << "\n"
    << "robot_speed = " << d(robot_speed) << "\n"
    << "sensing_radius = " << d(sensing_radius) << "\n"
    << "service_interval = " << d(service_interval) << "\n"
    << "person_radius = " << d(person_radius) << "\n"
    << "replan_period = " << replan_period << "\n"
    << "max_ticks = " << max_ticks << "\n"
    << "cells_x = " << grid.cells_x << "\n"
    << "cells_y = " << grid.cells_y << "\n"
    << "resolution = " << d(grid.resolution) << "\n"
    << "kappa = " << d(fusion.kappa) << "\n"
    << "lethal_frac = " << d(fusion.lethal_frac) << "\n"
    << "goal_radius = " << d(goal_radius) << "\n"
    << "marker_match = " << d(marker_match) << "\n"
    << "follow_lookahead = " << d(follow_lookahead) << "\n"
    << "corridor_width = " << d(corridor_width) << "\n"
    << "follow_distance = " << d(follow_distance) << "\n"
    << "lane_half_width = " << d(lane_half_width) << "\n"
    << "wall_lateral_offset = " << d(label.wall_lateral_offset) << "\n"
    << "wall_thickness = " << d(label.wall_thickness) << "\n"
    << "front_cap_extension = " << d(label.front_cap_extension) << "\n"
    << "group_dilation = " << d(label.group_dilation) << "\n";
  return o.str();
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::running: return "running";
    case Outcome::reached_goal: return "reached_goal";
    case Outcome::timeout: return "timeout";
    case Outcome::norm_violation: return "norm_violation";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// State

Scenario SimState::truth() const {
  Scenario s;
  s.goal = goal;
  s.groups = groups;
  s.isolated_people = isolated;
  if (queue && remaining_in_queue() > 0) {
    QueueSpec q = *queue;
    const auto n = static_cast<std::size_t>(remaining_in_queue());
    q.gaps.resize(n);
    q.lateral_devs.resize(n);
    s.queue = q;
  }
  return s;
}

std::vector<TruePerson> SimState::people() const {
  std::vector<TruePerson> out;
  const Scenario t = truth();
  if (t.queue) {
    const auto pos = t.queue->people();
    for (std::size_t k = 0; k < pos.size(); ++k) out.push_back({served + static_cast<int>(k), pos[k], true});
  }
  int id = 1000;
  for (const auto& g : groups)
    for (const auto& m : g.members) out.push_back({id++, m.position(), false});
  id = 2000;
  for (const auto& p : isolated) out.push_back({id++, p.position(), false});
  return out;
}

SimState initial_state(const Scenario& scenario, const Vec2& start) {
  SimState s;
  s.robot = start;
  s.queue = scenario.queue;
  s.groups = scenario.groups;
  s.isolated = scenario.isolated_people;
  s.goal = scenario.goal;
  s.behind.assign(scenario.queue ? static_cast<std::size_t>(scenario.queue->size()) : 0, 0);
  return s;
}

// ---------------------------------------------------------------------------
// Sensing

bool occluded(const Vec2& a, const Vec2& b, const std::vector<TruePerson>& people, int skip, double radius) {
  for (const auto& p : people) {
    if (p.id == skip) continue;
    if ((p.position - b).norm() < 1e-9) continue;
    if (distance_to_segment(p.position, a, b) < radius) return true;
  }
  return false;
}

std::vector<SensedPerson> visible_people(const SimState& state, const SimConfig& cfg) {
  const auto people = state.people();
  std::vector<SensedPerson> out;
  for (const auto& p : people) {
    if ((p.position - state.robot).norm() > cfg.sensing_radius) continue;
    if (occluded(state.robot, p.position, people, p.id, cfg.person_radius)) continue;
    out.push_back({p.id, p.position});
  }
  return out;
}

void update_markers(SimState& state, const std::vector<SensedPerson>& visible, const SimConfig& cfg) {
  std::vector<std::uint8_t> refreshed(state.markers.size(), 0);
  for (const auto& v : visible) {
    bool matched = false;
    for (std::size_t i = 0; i < state.markers.size(); ++i) {
      if ((state.markers[i].position - v.position).norm() <= cfg.marker_match) {
        state.markers[i] = {v.position, state.tick};
        refreshed[i] = 1;
        matched = true;
        break;
      }
    }
    if (!matched) {
      state.markers.push_back({v.position, state.tick});
      refreshed.push_back(1);
    }
  }
  const auto people = state.people();
  std::vector<Marker> kept;
  for (std::size_t i = 0; i < state.markers.size(); ++i) {
    const Marker& m = state.markers[i];
    bool remove = false;
    if (!refreshed[i] && (m.position - state.robot).norm() <= cfg.sensing_radius &&
        !occluded(state.robot, m.position, people, -1, cfg.person_radius)) {
      remove = true;
      for (const auto& p : people)
        if ((p.position - m.position).norm() <= cfg.marker_match) remove = false;
    }
    if (!remove) kept.push_back(m);
  }
  state.markers = std::move(kept);
}

std::vector<Vec2> sensed_positions(const SimState& state) {
  std::vector<Vec2> out;
  for (const auto& m : state.markers) out.push_back(m.position);
  return out;
}

// ---------------------------------------------------------------------------
// Stepping

namespace {

void emit(EpisodeTrace& trace, const SimState& s, const std::string& event) {
  trace.events.push_back({s.tick, s.robot, event});
}

/// Points every `ds` meters along robot -> waypoints, up to `length` meters, with tangents.
std::vector<std::pair<Vec2, Vec2>> sample_ahead(const SimState& s, double length, double ds) {
  std::vector<std::pair<Vec2, Vec2>> out;
  Vec2 prev = s.robot;
  double travelled = 0.0;
  for (const auto& w : s.waypoints) {
    const Vec2 seg = w - prev;
    const double len = seg.norm();
    if (len < 1e-12) continue;
    const Vec2 t = seg / len;
    for (double u = 0.0; u < len && travelled + u <= length; u += ds) out.emplace_back(prev + u * t, t);
    travelled += len;
    prev = w;
    if (travelled > length) break;
  }
  return out;
}

/// Distance along dir to the first lethal social cell, or infinity within max_dist.
double ray_to_lethal(const CostMap& social, const Vec2& from, const Vec2& dir, double max_dist, double lethal) {
  const double ds = 0.5 * social.spec.resolution;
  for (double d = ds; d <= max_dist; d += ds) {
    const auto c = world_to_cell(from + d * dir, social.spec);
    if (!c) return std::numeric_limits<double>::infinity();
    if (social.values(c->row, c->col) >= lethal) return d;
  }
  return std::numeric_limits<double>::infinity();
}

bool must_wait(const SimState& s, const SimConfig& cfg) {
  const auto sensed = sensed_positions(s);
  // A sensed person stands on the path within sensing range.
  Vec2 prev = s.robot;
  for (const auto& w : s.waypoints) {
    if ((prev - s.robot).norm() > cfg.sensing_radius) break;
    for (const auto& p : sensed)
      if (distance_to_segment(p, prev, w) < cfg.person_radius) return true;
    prev = w;
  }
  // Inside a social corridor, keep follow_distance to the people ahead.
  if (s.social.values.size() == 0) return false;
  for (const auto& [p, t] : sample_ahead(s, cfg.follow_lookahead, 0.5 * cfg.grid.resolution)) {
    const Vec2 n(-t.y(), t.x());
    const double left = ray_to_lethal(s.social, p, n, cfg.corridor_width, cfg.fusion.lethal_frac);
    const double right = ray_to_lethal(s.social, p, -n, cfg.corridor_width, cfg.fusion.lethal_frac);
    if (left + right > cfg.corridor_width) continue;
    for (const auto& q : sensed)
      if ((q - p).norm() < cfg.follow_distance) return true;
  }
  return false;
}

void replan(SimState& s, const SimConfig& cfg, const SocialCostSource& source, EpisodeTrace& trace,
            const ReplanHook& on_replan) {
  ++trace.replans;
  const auto sensed = sensed_positions(s);
  SocialGridMap input(cfg.grid);
  for (const auto& p : sensed) rasterize_disc<std::uint8_t>(input.people, cfg.grid, p, cfg.person_radius, 1);
  rasterize_disc<std::uint8_t>(input.goal, cfg.grid, s.goal.position(), cfg.goal_radius, 1);
  CostStack stack(cfg.grid);
  stack.social = source.social_cost(input, s.truth());
  for (const auto& p : sensed) rasterize_disc(stack.local.values, cfg.grid, p, cfg.person_radius, 1.0f);
  s.social = stack.social;
  const FusedCost field = fuse(stack, cfg.fusion);
  if (on_replan) on_replan(s, input, stack.social, field);

  const Cell here = clamp_to_grid(s.robot, cfg.grid);
  const Cell goal = clamp_to_grid(s.goal.position(), cfg.grid);
  std::optional<Cell> start = here;
  if (field.is_lethal(here)) start = nearest_cell(cfg.grid, here, [&](const Cell& c) { return !field.is_lethal(c); });
  std::optional<Path> path;
  if (start && !field.is_lethal(goal)) path = plan(field, *start, goal);
  if (!path) {
    s.waypoints.clear();
    emit(trace, s, "no_path");
    return;
  }
  s.waypoints = path->poses;
  // The robot already occupies the start cell; heading back to its center would step backwards.
  if (*start == here && s.waypoints.size() > 1) s.waypoints.erase(s.waypoints.begin());
  emit(trace, s, "replan");
}

void advance(SimState& s, double distance) {
  std::size_t i = 0;
  while (distance > 0.0 && i < s.waypoints.size()) {
    const Vec2 d = s.waypoints[i] - s.robot;
    const double len = d.norm();
    if (len <= distance) {
      s.robot = s.waypoints[i];
      distance -= len;
      ++i;
    } else {
      s.robot += d * (distance / len);
      distance = 0.0;
    }
  }
  s.waypoints.erase(s.waypoints.begin(), s.waypoints.begin() + static_cast<std::ptrdiff_t>(i));
}

std::string check_norms(SimState& s, const SimConfig& cfg) {
  const Scenario truth = s.truth();
  const auto cell = world_to_cell(s.robot, cfg.grid);
  if (cell) {
    const Vec2 c = cell_to_world(*cell, cfg.grid);
    if (truth.queue && in_queue_label(*truth.queue, c, cfg.label)) return "queue_label";
    for (const auto& g : truth.groups)
      if (g.members.size() >= 2 && distance_to_group_hull(g, c) <= cfg.label.group_dilation) return "group_label";
  }
  if (truth.queue) {
    const Vec2 r = truth.queue->to_queue_frame(s.robot);
    if (std::abs(r.y()) <= cfg.lane_half_width) {
      const auto pos = truth.queue->people();
      for (std::size_t k = 0; k < pos.size(); ++k) {
        const auto id = static_cast<std::size_t>(s.served) + k;
        const double a = truth.queue->to_queue_frame(pos[k]).x();
        if (r.x() > a) s.behind[id] = 1;
        if (r.x() < a && s.behind[id]) return "overtake";
      }
    }
  }
  return {};
}

}  // namespace

void step(SimState& s, const SimConfig& cfg, const SocialCostSource& source, EpisodeTrace& trace,
          const ReplanHook& on_replan) {
  if (s.outcome != Outcome::running) return;
  const int service_ticks = std::max(1, static_cast<int>(std::lround(cfg.service_interval / cfg.tick)));
  if (s.tick > 0 && s.tick % service_ticks == 0 && s.remaining_in_queue() > 0) {
    ++s.served;
    ++trace.services;
    emit(trace, s, "serviced");
  }

  update_markers(s, visible_people(s, cfg), cfg);
  if (s.tick % cfg.replan_period == 0) replan(s, cfg, source, trace, on_replan);

  if (!s.waypoints.empty()) {
    if (must_wait(s, cfg)) {
      ++trace.waits;
      emit(trace, s, "wait");
    } else {
      advance(s, cfg.robot_speed * cfg.tick);
      emit(trace, s, "move");
    }
  } else if (s.outcome == Outcome::running) {
    ++trace.waits;
    emit(trace, s, "wait");
  }

  const std::string violation = check_norms(s, cfg);
  const Vec2 goal_center = cell_to_world(clamp_to_grid(s.goal.position(), cfg.grid), cfg.grid);
  if (!violation.empty()) {
    s.outcome = Outcome::norm_violation;
    s.violation = violation;
    emit(trace, s, "violation:" + violation);
  } else if ((s.robot - goal_center).norm() < 1e-9) {
    s.outcome = Outcome::reached_goal;
    emit(trace, s, "reached_goal");
  }
  ++s.tick;
  if (s.outcome == Outcome::running && s.tick >= cfg.max_ticks) {
    s.outcome = Outcome::timeout;
    emit(trace, s, "timeout");
  }
}

EpisodeTrace run_episode(const Scenario& scenario, const Vec2& start, const SimConfig& cfg,
                         const SocialCostSource& source, const ReplanHook& on_replan) {
  cfg.validate();
  SimState s = initial_state(scenario, start);
  EpisodeTrace trace;
  while (s.outcome == Outcome::running) step(s, cfg, source, trace, on_replan);
  trace.outcome = s.outcome;
  trace.violation = s.violation;
  trace.ticks = s.tick;
  return trace;
}

void write_trace(const EpisodeTrace& trace, std::ostream& out) {
  out << "tick,x,y,event\n";
  char buf[128];
  for (const auto& e : trace.events) {
    std::snprintf(buf, sizeof buf, "%d,%.4f,%.4f,", e.tick, e.robot.x(), e.robot.y());
    out << buf << e.event << "\n";
  }
}

}  // namespace scf
