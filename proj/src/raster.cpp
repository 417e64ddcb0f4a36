#include "scf/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace scf {

CostMap::CostMap(const GridSpec& s, Raster<float> v) : spec(s), values(std::move(v)) {
  if (values.rows() != s.cells_y || values.cols() != s.cells_x)
    throw std::invalid_argument("cost map raster does not match grid spec");
}

bool CostMap::in_range() const {
  return values.allFinite() && (values >= 0.0f).all() && (values <= 1.0f).all();
}

CostStack::CostStack(CostMap g, CostMap l, CostMap s)
    : global(std::move(g)), local(std::move(l)), social(std::move(s)) {}

FusedCost fuse(const CostStack& stack, const FusionParams& params) {
  const GridSpec& spec = stack.global.spec;
  if (!(stack.local.spec == spec) || !(stack.social.spec == spec))
    throw std::invalid_argument("fuse: cost layers have mismatched grid specs");
  if (!(params.kappa > 0.0)) throw std::invalid_argument("fuse: kappa must be positive");
  if (!(params.lethal_frac > 0.0 && params.lethal_frac <= 1.0))
    throw std::invalid_argument("fuse: lethal_frac must be in (0, 1]");

  const Raster<double> sum = (stack.global.values.cast<double>() + stack.local.values.cast<double>() +
                              stack.social.values.cast<double>())
                                 .min(1.0);
  FusedCost out{spec, params.kappa * sum, (sum >= params.lethal_frac).cast<std::uint8_t>()};
  return out;
}

void inflate(FusedCost& fused, double radius, double peak, double kappa) {
  if (radius <= 0.0 || peak <= 0.0) return;
  const GridSpec& spec = fused.spec;
  const int reach = static_cast<int>(std::ceil(radius / spec.resolution));
  Raster<double> nearest = make_raster<double>(spec, std::numeric_limits<double>::infinity());
  for (int r = 0; r < spec.cells_y; ++r) {
    for (int c = 0; c < spec.cells_x; ++c) {
      if (!fused.lethal(r, c)) continue;
      for (int dr = -reach; dr <= reach; ++dr) {
        for (int dc = -reach; dc <= reach; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= spec.cells_y || cc >= spec.cells_x) continue;
          const double d = spec.resolution * std::hypot(dr, dc);
          nearest(rr, cc) = std::min(nearest(rr, cc), d);
        }
      }
    }
  }
  for (int r = 0; r < spec.cells_y; ++r) {
    for (int c = 0; c < spec.cells_x; ++c) {
      if (fused.lethal(r, c) || nearest(r, c) >= radius) continue;
      const double halo = peak * kappa * (1.0 - nearest(r, c) / radius);
      fused.entry_cost(r, c) = std::max(fused.entry_cost(r, c), halo);
    }
  }
}

}  // namespace scf
