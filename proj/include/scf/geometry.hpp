#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <optional>

namespace scf {

using Vec2 = Eigen::Vector2d;

/// Planar pose in meters / radians. theta is kept in [-pi, pi).
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2() = default;
  Pose2(double x_, double y_, double theta_ = 0.0);
  explicit Pose2(const Vec2& p, double theta_ = 0.0) : Pose2(p.x(), p.y(), theta_) {}

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose2&, const Pose2&) = default;
};

/// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

/// Rotates p about the origin by angle.
Vec2 rotate(const Vec2& p, double angle);
Pose2 rotate(const Pose2& p, double angle);

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Square raster geometry. The frame origin sits at the raster center;
/// row 0 is the max-y edge and col 0 the min-x edge. center.theta is unused.
struct GridSpec {
  int cells_x = 120;
  int cells_y = 120;
  double resolution = 0.2;
  Pose2 center{};

  double extent_x() const { return cells_x * resolution; }
  double extent_y() const { return cells_y * resolution; }
  int cell_count() const { return cells_x * cells_y; }
  bool valid() const { return cells_x > 0 && cells_y > 0 && resolution > 0.0; }
  bool contains(const Cell& c) const { return c.row >= 0 && c.row < cells_y && c.col >= 0 && c.col < cells_x; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Returns std::nullopt for points outside the raster.
std::optional<Cell> world_to_cell(const Vec2& p, const GridSpec& spec);
inline std::optional<Cell> world_to_cell(const Pose2& p, const GridSpec& spec) {
  return world_to_cell(p.position(), spec);
}

/// Center of a cell in world coordinates.
Vec2 cell_to_world(const Cell& c, const GridSpec& spec);

/// Nearest in-bounds cell (clamps out-of-bounds points to the border).
Cell clamp_to_grid(const Vec2& p, const GridSpec& spec);

/// Euclidean distance from p to segment [a, b].
double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b);

}  // namespace scf
