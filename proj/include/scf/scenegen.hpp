#pragma once

// Procedural queue / group scenarios and their ground-truth social cost labels.

#include "scf/config.hpp"
#include "scf/geometry.hpp"
#include "scf/raster.hpp"
#include "scf/rng.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace scf {

/// A straight queue. Person i sits at axial distance gaps[0] + ... + gaps[i]
/// behind the goal, offset laterally by lateral_devs[i].
struct QueueSpec {
  Pose2 goal;
  Vec2 axis{1.0, 0.0};  ///< unit vector from the goal toward the rear
  std::vector<double> gaps;
  std::vector<double> lateral_devs;

  int size() const { return static_cast<int>(gaps.size()); }
  Vec2 lateral() const { return {-axis.y(), axis.x()}; }
  std::vector<Vec2> people() const;
  /// Axial coordinate of the last person (distance behind the goal).
  double rear_axial() const;
  /// (axial, lateral) coordinates of p in the queue frame.
  Vec2 to_queue_frame(const Vec2& p) const;
};

struct GroupSpec {
  std::vector<Pose2> members;
};

struct Scenario {
  std::optional<QueueSpec> queue;
  Pose2 goal;
  std::vector<GroupSpec> groups;
  std::vector<Pose2> isolated_people;
  double rotation = 0.0;  ///< reference heading; the queue axis when a queue is present

  std::vector<Vec2> all_people() const;
  int people_count() const { return static_cast<int>(all_people().size()); }
};

/// Rotates every entity of the scenario about the world origin.
Scenario rotate(const Scenario& s, double angle);

struct LabelGeometry {
  double wall_lateral_offset = 0.8;
  double wall_thickness = 0.4;
  double front_cap_extension = 1.0;
  double group_dilation = 0.3;
};

struct GenConfig {
  GridSpec grid{};
  std::uint64_t seed = 1;

  Range<int> people_in_queue{2, 5};  ///< 0..0 disables queues
  Range<double> queue_gap{0.5, 1.5};
  Range<double> lateral_deviation{0.0, 0.5};  ///< magnitude; sign drawn uniformly
  Range<int> number_of_groups{1, 1};  ///< 0..0 disables groups
  Range<int> people_in_group{2, 2};
  Range<double> member_spacing{0.6, 2.4};  ///< members lie in a disc of diameter hi, pairwise >= lo

  double p_goal_only = 0.1;
  double p_isolated = 0.3;
  Range<int> isolated_people{1, 3};

  LabelGeometry label{};
  double person_radius = 0.25;
  double goal_radius = 0.25;

  double group_clearance = 3.0;     ///< min distance between members of different groups, and to the goal
  double queue_clearance = 1.0;     ///< min gap between a group's label and the queue's label
  double isolated_clearance = 3.0;  ///< min distance from an isolated person to anyone else
  double rear_clearance = 1.0;      ///< free space kept behind the queue opening
  double map_margin = 0.2;

  /// Throws ConfigError when ranges are empty, negative, or cannot fit the map.
  void validate() const;

  static GenConfig from_keys(KeyValues& kv);
  /// Flat key = value text, readable by from_keys.
  std::string to_text() const;
};

GenConfig load_gen_config(const std::filesystem::path& path);

/// Throws ConfigError when no placement fits after 100 attempts.
Scenario sample_scenario(Rng& rng, const GenConfig& config);
/// Scenario for dataset index `index` under config.seed.
Scenario sample_scenario_at(const GenConfig& config, std::uint64_t index);

SocialGridMap render_input(const Scenario& s, const GridSpec& spec, const GenConfig& config);
CostMap render_label_queue(const QueueSpec& q, const GridSpec& spec, const LabelGeometry& label);
CostMap render_label_groups(const std::vector<GroupSpec>& groups, const GridSpec& spec, const LabelGeometry& label);
/// Per-cell max of queue and group labels (zero when neither exists).
CostMap render_label(const Scenario& s, const GridSpec& spec, const LabelGeometry& label);

/// True when p lies in the U-shaped queue obstacle.
bool in_queue_label(const QueueSpec& q, const Vec2& p, const LabelGeometry& label);
/// Distance from p to the (possibly degenerate) convex hull of the group; 0 inside.
double distance_to_group_hull(const GroupSpec& g, const Vec2& p);

struct Sample {
  Scenario scenario;
  SocialGridMap input;
  CostMap label;
};

Sample make_sample(Rng& rng, const GenConfig& config, const GridSpec& spec);
Sample make_sample_at(const GenConfig& config, std::uint64_t index);

struct DatasetManifest {
  int format_version = 1;
  std::uint64_t count = 0;
  GenConfig config{};
};

std::string sample_stem(std::uint64_t index);

/// Writes count (input, label) pairs plus manifest.txt into dir.
DatasetManifest write_dataset(const GenConfig& config, std::uint64_t count, const std::filesystem::path& dir);
DatasetManifest read_manifest(const std::filesystem::path& dir);

}  // namespace scf
