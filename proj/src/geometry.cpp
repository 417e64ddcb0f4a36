#include "scf/geometry.hpp"

#include <algorithm>

namespace scf {

Pose2::Pose2(double x_, double y_, double theta_) : x(x_), y(y_), theta(wrap_angle(theta_)) {}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, two_pi);
  if (w < 0.0) w += two_pi;
  w -= std::numbers::pi;
  // fmod rounding can land exactly on +pi
  return w >= std::numbers::pi ? -std::numbers::pi : w;
}

Vec2 rotate(const Vec2& p, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x() - s * p.y(), s * p.x() + c * p.y()};
}

Pose2 rotate(const Pose2& p, double angle) { return Pose2(rotate(p.position(), angle), p.theta + angle); }

std::optional<Cell> world_to_cell(const Vec2& p, const GridSpec& spec) {
  const double fc = (p.x() - spec.center.x) / spec.resolution + 0.5 * spec.cells_x;
  const double fr = 0.5 * spec.cells_y - (p.y() - spec.center.y) / spec.resolution;
  if (!std::isfinite(fc) || !std::isfinite(fr)) return std::nullopt;
  const Cell c{static_cast<int>(std::floor(fr)), static_cast<int>(std::floor(fc))};
  if (fc < 0.0 || fr < 0.0 || !spec.contains(c)) return std::nullopt;
  return c;
}

Vec2 cell_to_world(const Cell& c, const GridSpec& spec) {
  return {spec.center.x + (c.col + 0.5 - 0.5 * spec.cells_x) * spec.resolution,
          spec.center.y + (0.5 * spec.cells_y - c.row - 0.5) * spec.resolution};
}

Cell clamp_to_grid(const Vec2& p, const GridSpec& spec) {
  const double fc = (p.x() - spec.center.x) / spec.resolution + 0.5 * spec.cells_x;
  const double fr = 0.5 * spec.cells_y - (p.y() - spec.center.y) / spec.resolution;
  return {std::clamp(static_cast<int>(std::floor(fr)), 0, spec.cells_y - 1),
          std::clamp(static_cast<int>(std::floor(fc)), 0, spec.cells_x - 1)};
}

double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace scf
