#include "scf/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <queue>
#include <tuple>

namespace scf {
namespace {

constexpr int kMoves[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}};

void check_endpoint(const FusedCost& field, const Cell& c, const char* what) {
  if (!field.spec.contains(c)) throw PlanError(std::string("plan: ") + what + " cell out of bounds");
  if (field.is_lethal(c)) throw PlanError(std::string("plan: ") + what + " cell is lethal");
}

}  // namespace

double step_length(const Cell& from, const Cell& to, double resolution) {
  const bool diagonal = from.row != to.row && from.col != to.col;
  return diagonal ? resolution * std::numbers::sqrt2 : resolution;
}

std::optional<Path> plan(const FusedCost& field, const Cell& start, const Cell& goal) {
  check_endpoint(field, start, "start");
  check_endpoint(field, goal, "goal");
  const GridSpec& spec = field.spec;
  const int w = spec.cells_x;
  const auto index = [w](int r, int c) { return static_cast<std::size_t>(r) * w + c; };

  std::vector<double> dist(static_cast<std::size_t>(spec.cell_count()), std::numeric_limits<double>::infinity());
  std::vector<int> parent(dist.size(), -1);
  std::vector<std::uint8_t> settled(dist.size(), 0);

  // (cost, row, col): ties expand the lower row, then the lower col, first.
  using Entry = std::tuple<double, int, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  dist[index(start.row, start.col)] = 0.0;
  open.emplace(0.0, start.row, start.col);

  while (!open.empty()) {
    const auto [d, r, c] = open.top();
    open.pop();
    const std::size_t u = index(r, c);
    if (settled[u]) continue;
    settled[u] = 1;
    if (r == goal.row && c == goal.col) break;
    for (const auto& m : kMoves) {
      const int nr = r + m[0], nc = c + m[1];
      if (nr < 0 || nc < 0 || nr >= spec.cells_y || nc >= w) continue;
      if (field.lethal(nr, nc)) continue;
      if (m[0] != 0 && m[1] != 0 && field.lethal(r, nc) && field.lethal(nr, c)) continue;
      const std::size_t v = index(nr, nc);
      if (settled[v]) continue;
      const double candidate = d + (step_length({r, c}, {nr, nc}, spec.resolution) + field.entry_cost(nr, nc));
      if (candidate < dist[v]) {
        dist[v] = candidate;
        parent[v] = static_cast<int>(u);
        open.emplace(candidate, nr, nc);
      }
    }
  }

  const std::size_t g = index(goal.row, goal.col);
  if (!settled[g]) return std::nullopt;
  Path path;
  path.total_cost = dist[g];
  for (int v = static_cast<int>(g); v != -1; v = parent[static_cast<std::size_t>(v)]) {
    path.cells.push_back({v / w, v % w});
    if (v == static_cast<int>(index(start.row, start.col))) break;
  }
  std::reverse(path.cells.begin(), path.cells.end());
  for (const auto& cell : path.cells) path.poses.push_back(cell_to_world(cell, spec));
  return path;
}

FusedCost fuse_request(const PlanRequest& request) {
  FusedCost field = fuse(request.stack, request.fusion);
  if (request.inflation_radius > 0.0) inflate(field, request.inflation_radius, request.inflation_peak, request.fusion.kappa);
  return field;
}

std::optional<Path> plan(const PlanRequest& request) { return plan(fuse_request(request), request.start, request.goal); }

double path_cost(const std::vector<Cell>& cells, const FusedCost& field) {
  double total = 0.0;
  for (std::size_t i = 1; i < cells.size(); ++i)
    total += step_length(cells[i - 1], cells[i], field.spec.resolution) + field.entry_cost(cells[i].row, cells[i].col);
  return total;
}

Clearance path_clearance(const Path& path, const CostMap& raster, double threshold) {
  for (const auto& c : path.cells) {
    if (raster.values(c.row, c.col) >= threshold) return {false, c};
  }
  return {};
}

void write_path(const Path& path, std::ostream& out) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "# total_cost: %.9g\n", path.total_cost);
  out << buf;
  for (std::size_t i = 0; i < path.cells.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.4f,%.4f\n", path.cells[i].row, path.cells[i].col, path.poses[i].x(),
                  path.poses[i].y());
    out << buf;
  }
}

}  // namespace scf
