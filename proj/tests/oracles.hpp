#pragma once

// Independent reference implementations used only by tests.

#include "scf/net.hpp"
#include "scf/planner.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace scf::oracle {

/// Label-correcting relaxation to a fixpoint; no priority queue. Same edge model as the planner.
inline std::optional<double> plan_cost(const FusedCost& field, const Cell& start, const Cell& goal) {
  const int h = field.spec.cells_y, w = field.spec.cells_x;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d(static_cast<std::size_t>(h) * w, inf);
  auto at = [&](int r, int c) -> double& { return d[static_cast<std::size_t>(r) * w + c]; };
  at(start.row, start.col) = 0.0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (at(r, c) == inf) continue;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            if (!dr && !dc) continue;
            const int nr = r + dr, nc = c + dc;
            if (nr < 0 || nc < 0 || nr >= h || nc >= w || field.lethal(nr, nc)) continue;
            if (dr && dc && field.lethal(r, nc) && field.lethal(nr, c)) continue;
            const double step = dr && dc ? field.spec.resolution * std::sqrt(2.0) : field.spec.resolution;
            const double cand = at(r, c) + (step + field.entry_cost(nr, nc));
            if (cand < at(nr, nc)) {
              at(nr, nc) = cand;
              changed = true;
            }
          }
        }
      }
    }
  }
  const double g = at(goal.row, goal.col);
  if (g == inf) return std::nullopt;
  return g;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)});
}

/// Central difference of f at x[i] with step h.
template <typename F>
double central_difference(F&& f, double& xi, double h) {
  const double saved = xi;
  xi = saved + h;
  const double fp = f();
  xi = saved - h;
  const double fm = f();
  xi = saved;
  return (fp - fm) / (2.0 * h);
}

/// Smallest |pre-activation| over rectified conv layers and smallest gap between the
/// top two entries of any pooling window; finite differences are unreliable when
/// either is below the step size.
inline double kink_distance(const net::Model<double>& model, const net::Tensor<double>& x) {
  double best = std::numeric_limits<double>::infinity();
  net::Tensor<double> cur = x;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    net::Model<double> single;
    single.input = {cur.channels(), cur.height(), cur.width(), model.input.resolution};
    single.layers = {model.layers[i]};
    single.params = {model.params[i]};
    if (const auto* c = std::get_if<net::Conv>(&model.layers[i]); c && c->relu) {
      net::Conv linear = *c;
      linear.relu = false;
      single.layers = {linear};
      const auto pre = net::forward(single, cur);
      best = std::min(best, pre.data().abs().minCoeff());
      single.layers = {*c};
    }
    if (std::holds_alternative<net::MaxPool>(model.layers[i])) {
      for (int b = 0; b < cur.batch(); ++b)
        for (int ch = 0; ch < cur.channels(); ++ch)
          for (int y = 0; y + 1 < cur.height(); y += 2)
            for (int xx = 0; xx + 1 < cur.width(); xx += 2) {
              double v[4] = {cur.at(b, ch, y, xx), cur.at(b, ch, y, xx + 1), cur.at(b, ch, y + 1, xx),
                             cur.at(b, ch, y + 1, xx + 1)};
              std::sort(v, v + 4);
              if (v[3] != 0.0 || v[2] != 0.0) best = std::min(best, v[3] - v[2]);
            }
    }
    cur = net::forward(single, cur);
  }
  return best;
}

}  // namespace scf::oracle
