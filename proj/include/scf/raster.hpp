#pragma once

#include "scf/geometry.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace scf {

/// Row-major raster indexed (row, col), shaped cells_y x cells_x.
template <typename Scalar>
using Raster = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using BinaryRaster = Raster<std::uint8_t>;

template <typename Scalar>
Raster<Scalar> make_raster(const GridSpec& spec, Scalar fill = Scalar(0)) {
  return Raster<Scalar>::Constant(spec.cells_y, spec.cells_x, fill);
}

/// Sets every cell whose center lies within radius of center. Off-map parts are clipped.
template <typename Scalar>
void rasterize_disc(Raster<Scalar>& raster, const GridSpec& spec, const Vec2& center, double radius,
                    Scalar value) {
  // Small slack so radius-0 discs and discs touching neighbor centers are stable.
  constexpr double slack = 1e-9;
  const double r = radius + slack;
  const Cell lo = clamp_to_grid(center + Vec2(-r, r), spec);
  const Cell hi = clamp_to_grid(center + Vec2(r, -r), spec);
  for (int row = lo.row; row <= hi.row; ++row) {
    for (int col = lo.col; col <= hi.col; ++col) {
      if ((cell_to_world({row, col}, spec) - center).squaredNorm() <= r * r) raster(row, col) = value;
    }
  }
}

/// Network input: robot-centered people and goal channels, values in {0, 1}.
struct SocialGridMap {
  GridSpec spec;
  BinaryRaster people;
  BinaryRaster goal;

  explicit SocialGridMap(const GridSpec& s = {})
      : spec(s), people(make_raster<std::uint8_t>(s)), goal(make_raster<std::uint8_t>(s)) {}
};

/// Per-cell cost in [0, 1].
struct CostMap {
  GridSpec spec;
  Raster<float> values;

  explicit CostMap(const GridSpec& s = {}, float fill = 0.0f) : spec(s), values(make_raster<float>(s, fill)) {}
  CostMap(const GridSpec& s, Raster<float> v);

  bool in_range() const;
};

/// Global, local and social layers over a shared grid.
struct CostStack {
  CostMap global;
  CostMap local;
  CostMap social;

  explicit CostStack(const GridSpec& s = {}) : global(s), local(s), social(s) {}
  CostStack(CostMap g, CostMap l, CostMap s);
  const GridSpec& spec() const { return global.spec; }
};

/// Planner-ready field: entry cost kappa * min(1, sum of layers) and lethal mask.
struct FusedCost {
  GridSpec spec;
  Raster<double> entry_cost;
  BinaryRaster lethal;

  bool is_lethal(const Cell& c) const { return lethal(c.row, c.col) != 0; }
};

struct FusionParams {
  double kappa = 10.0;        ///< meters of path length per unit cost
  double lethal_frac = 0.78;  ///< saturated sum at or above this is untraversable
};

/// Throws std::invalid_argument on mismatched layer specs or bad parameters.
FusedCost fuse(const CostStack& stack, const FusionParams& params = {});

/// Adds a linearly decaying halo of peak * kappa around lethal cells, out to radius meters.
/// Lethal cells are left untouched.
void inflate(FusedCost& fused, double radius, double peak, double kappa);

}  // namespace scf
