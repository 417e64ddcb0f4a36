#pragma once

// Discrete-time queue/group simulator: limited sensing with occlusion and
// person markers, periodic replanning over a live social layer, waiting
// behind queued people, and queue service.

#include "scf/config.hpp"
#include "scf/planner.hpp"
#include "scf/scenegen.hpp"
#include "scf/social_source.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace scf {

struct SimConfig {
  double tick = 0.1;              ///< seconds
  double robot_speed = 0.5;       ///< m/s
  double sensing_radius = 4.0;    ///< meters
  double service_interval = 8.0;  ///< seconds between queue services
  double person_radius = 0.25;
  int replan_period = 5;  ///< ticks
  int max_ticks = 3000;

  GridSpec grid{};
  FusionParams fusion{};
  double goal_radius = 0.25;
  double marker_match = 0.3;          ///< a sighting within this distance refreshes a marker
  double follow_lookahead = 1.0;      ///< path arc length checked for the corridor wait rule
  double corridor_width = 2.0;        ///< max wall-to-wall width counted as a social corridor
  double follow_distance = 1.6;       ///< keep this far from people ahead inside a corridor
  double lane_half_width = 1.2;       ///< |lateral| bound of the queue lane for overtaking
  LabelGeometry label{};

  /// Throws ConfigError.
  void validate() const;
  static SimConfig from_keys(KeyValues& kv);
  std::string to_text() const;
};

struct Marker {
  Vec2 position;
  int last_seen = 0;
};

struct SensedPerson {
  int id = 0;
  Vec2 position;
};

/// A person in the true scene. Queue members have ids 0..n-1 in original queue order.
struct TruePerson {
  int id = 0;
  Vec2 position;
  bool queued = false;
};

enum class Outcome { running, reached_goal, timeout, norm_violation };
std::string to_string(Outcome o);

struct SimState {
  int tick = 0;
  Vec2 robot{0.0, 0.0};
  std::optional<QueueSpec> queue;  ///< original queue; members [served, n) remain
  int served = 0;
  std::vector<GroupSpec> groups;
  std::vector<Pose2> isolated;
  Pose2 goal;
  std::vector<Marker> markers;
  std::vector<Vec2> waypoints;  ///< remaining path, world coordinates
  std::vector<int> behind;      ///< per queue member: robot was behind it in the lane
  CostMap social;               ///< social layer of the last replan
  Outcome outcome = Outcome::running;
  std::string violation;

  int remaining_in_queue() const { return queue ? queue->size() - served : 0; }
  /// Current true scene (queue truncated to the remaining members, who hold the front slots).
  Scenario truth() const;
  std::vector<TruePerson> people() const;
};

SimState initial_state(const Scenario& scenario, const Vec2& start);

struct TraceEvent {
  int tick = 0;
  Vec2 robot;
  std::string event;
};

struct EpisodeTrace {
  std::vector<TraceEvent> events;
  Outcome outcome = Outcome::running;
  std::string violation;
  int ticks = 0;
  int services = 0;
  int waits = 0;
  int replans = 0;
};

/// Visible people: within sensing radius and not occluded by another person's disc.
std::vector<SensedPerson> visible_people(const SimState& state, const SimConfig& cfg);
/// Applies the marker add/refresh/remove rules for the current tick.
void update_markers(SimState& state, const std::vector<SensedPerson>& visible, const SimConfig& cfg);
/// Remembered person positions; after update_markers every visible person has one.
std::vector<Vec2> sensed_positions(const SimState& state);

/// True when segment a-b passes through the disc of any person other than `skip`.
bool occluded(const Vec2& a, const Vec2& b, const std::vector<TruePerson>& people, int skip, double radius);

/// Called after each replan with the sensed input, social layer and fused field.
using ReplanHook = std::function<void(const SimState&, const SocialGridMap&, const CostMap&, const FusedCost&)>;

/// Advances one tick: service, sensing, replanning, motion and norm checks.
void step(SimState& state, const SimConfig& cfg, const SocialCostSource& source, EpisodeTrace& trace,
          const ReplanHook& on_replan = {});

/// Runs until the goal is reached, a norm is violated, or max_ticks elapse. There is no
/// stochastic element: the scenario and start fully determine the trace.
EpisodeTrace run_episode(const Scenario& scenario, const Vec2& start, const SimConfig& cfg,
                         const SocialCostSource& source, const ReplanHook& on_replan = {});

/// "tick,x,y,event" lines.
void write_trace(const EpisodeTrace& trace, std::ostream& out);

}  // namespace scf
