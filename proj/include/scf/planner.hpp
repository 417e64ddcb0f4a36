#pragma once

// 8-connected wavefront Dijkstra over a fused cost field. A move from u to v
// costs d(u, v) + c(v): resolution (axial) or resolution * sqrt(2) (diagonal)
// plus the fused entry cost of v. Lethal cells are never entered, and a
// diagonal move is refused when both axial cells it skirts are lethal.

#include "scf/raster.hpp"

#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace scf {

class PlanError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PlanRequest {
  Cell start;
  Cell goal;
  CostStack stack;
  FusionParams fusion{};
  double inflation_radius = 0.0;  ///< meters; 0 disables the lethal halo
  double inflation_peak = 0.5;    ///< halo cost at the lethal boundary, as a fraction of kappa
};

struct Path {
  std::vector<Cell> cells;
  std::vector<Vec2> poses;
  double total_cost = 0.0;

  bool empty() const { return cells.empty(); }
};

/// Axial and diagonal step lengths in meters.
double step_length(const Cell& from, const Cell& to, double resolution);

/// Throws PlanError for out-of-bounds or lethal endpoints; nullopt when unreachable.
std::optional<Path> plan(const FusedCost& field, const Cell& start, const Cell& goal);
std::optional<Path> plan(const PlanRequest& request);

/// Fused field for a request, including inflation when enabled.
FusedCost fuse_request(const PlanRequest& request);

/// Sum of step lengths plus entry costs along the cells (start cell uncharged).
double path_cost(const std::vector<Cell>& cells, const FusedCost& field);

struct Clearance {
  bool clear = true;
  std::optional<Cell> first_violation;
};

/// clear iff no path cell has raster value >= threshold.
Clearance path_clearance(const Path& path, const CostMap& raster, double threshold);

/// "# total_cost: <c>" header, then one "row,col,x_m,y_m" line per waypoint.
void write_path(const Path& path, std::ostream& out);

/// Nearest accepted cell by Euclidean cell distance; ties go to the lower row, then col.
template <typename Pred>
std::optional<Cell> nearest_cell(const GridSpec& spec, const Cell& from, Pred&& accept) {
  std::optional<Cell> best;
  long best_d2 = 0;
  for (int r = 0; r < spec.cells_y; ++r) {
    for (int c = 0; c < spec.cells_x; ++c) {
      const long dr = r - from.row, dc = c - from.col;
      const long d2 = dr * dr + dc * dc;
      if (best && d2 >= best_d2) continue;
      if (!accept(Cell{r, c})) continue;
      best = Cell{r, c};
      best_d2 = d2;
    }
  }
  return best;
}

}  // namespace scf
