#pragma once

// Figure composition: cost shading, label outlines, people, goal, path and robot as a P6 image.

#include "scf/pnm.hpp"
#include "scf/raster.hpp"

#include <array>
#include <optional>
#include <vector>

namespace scf {

using Rgb = std::array<std::uint8_t, 3>;

namespace palette {
inline constexpr Rgb people{220, 30, 30};
inline constexpr Rgb goal{30, 180, 30};
inline constexpr Rgb label{40, 90, 230};
inline constexpr Rgb lethal{60, 60, 60};
inline constexpr Rgb path{250, 170, 0};
inline constexpr Rgb robot{200, 0, 200};
}  // namespace palette

struct RenderLayers {
  GridSpec spec{};
  const SocialGridMap* input = nullptr;  ///< people and goal discs
  const CostMap* cost = nullptr;         ///< shaded: white = 0, black = 1
  const FusedCost* fused = nullptr;      ///< lethal cells drawn dark; overrides `cost` shading when set
  const CostMap* label = nullptr;        ///< outline of cells >= 0.5
  const std::vector<Vec2>* path = nullptr;
  std::optional<Vec2> robot;
  int scale = 4;  ///< pixels per cell
};

pnm::Image render(const RenderLayers& layers);

/// Number of pixels with exactly this color.
std::size_t count_color(const pnm::Image& image, const Rgb& color);

}  // namespace scf
