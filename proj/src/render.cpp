#include "scf/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scf {
namespace {

class Canvas {
 public:
  Canvas(int w, int h) : image_{w, h, 3, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3, 255)} {}

  void set(int x, int y, const Rgb& c) {
    if (x < 0 || y < 0 || x >= image_.width || y >= image_.height) return;
    const std::size_t i = (static_cast<std::size_t>(y) * image_.width + x) * 3;
    std::copy(c.begin(), c.end(), image_.pixels.begin() + static_cast<std::ptrdiff_t>(i));
  }

  void fill_cell(int row, int col, int scale, const Rgb& c) {
    for (int dy = 0; dy < scale; ++dy)
      for (int dx = 0; dx < scale; ++dx) set(col * scale + dx, row * scale + dy, c);
  }

  void line(double x0, double y0, double x1, double y1, const Rgb& c) {
    const double len = std::hypot(x1 - x0, y1 - y0);
    const int n = std::max(1, static_cast<int>(std::ceil(len * 2.0)));
    for (int i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) / n;
      const int x = static_cast<int>(std::floor(x0 + t * (x1 - x0)));
      const int y = static_cast<int>(std::floor(y0 + t * (y1 - y0)));
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) set(x + dx, y + dy, c);
    }
  }

  pnm::Image take() { return std::move(image_); }

 private:
  pnm::Image image_;
};

/// Pixel coordinates of a world point.
std::pair<double, double> to_pixel(const Vec2& p, const GridSpec& spec, int scale) {
  const double col = (p.x() - spec.center.x) / spec.resolution + spec.cells_x / 2.0;
  const double row = spec.cells_y / 2.0 - (p.y() - spec.center.y) / spec.resolution;
  return {col * scale, row * scale};
}

}  // namespace

pnm::Image render(const RenderLayers& layers) {
  const GridSpec& spec = layers.spec;
  if (!spec.valid() || layers.scale < 1) throw std::invalid_argument("render: invalid grid or scale");
  auto check = [&](const GridSpec& s) {
    if (!(s == spec)) throw std::invalid_argument("render: layer grid does not match");
  };
  if (layers.input) check(layers.input->spec);
  if (layers.cost) check(layers.cost->spec);
  if (layers.fused) check(layers.fused->spec);
  if (layers.label) check(layers.label->spec);

  const int s = layers.scale;
  Canvas canvas(spec.cells_x * s, spec.cells_y * s);
  for (int r = 0; r < spec.cells_y; ++r) {
    for (int c = 0; c < spec.cells_x; ++c) {
      if (layers.fused && layers.fused->lethal(r, c)) {
        canvas.fill_cell(r, c, s, palette::lethal);
        continue;
      }
      double v = 0.0;
      if (layers.fused) {
        v = layers.fused->entry_cost(r, c) / std::max(1e-9, layers.fused->entry_cost.maxCoeff());
      } else if (layers.cost) {
        v = layers.cost->values(r, c);
      }
      const auto g = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - 0.8 * std::clamp(v, 0.0, 1.0))));
      if (g != 255) canvas.fill_cell(r, c, s, {g, g, g});
    }
  }
  if (layers.label) {
    const auto& L = layers.label->values;
    for (int r = 0; r < spec.cells_y; ++r) {
      for (int c = 0; c < spec.cells_x; ++c) {
        if (L(r, c) < 0.5f) continue;
        const bool edge = r == 0 || c == 0 || r + 1 == spec.cells_y || c + 1 == spec.cells_x || L(r - 1, c) < 0.5f ||
                          L(r + 1, c) < 0.5f || L(r, c - 1) < 0.5f || L(r, c + 1) < 0.5f;
        if (edge) canvas.fill_cell(r, c, s, palette::label);
      }
    }
  }
  if (layers.input) {
    for (int r = 0; r < spec.cells_y; ++r) {
      for (int c = 0; c < spec.cells_x; ++c) {
        if (layers.input->people(r, c)) canvas.fill_cell(r, c, s, palette::people);
        if (layers.input->goal(r, c)) canvas.fill_cell(r, c, s, palette::goal);
      }
    }
  }
  if (layers.path && layers.path->size() >= 2) {
    for (std::size_t i = 1; i < layers.path->size(); ++i) {
      const auto [x0, y0] = to_pixel((*layers.path)[i - 1], spec, s);
      const auto [x1, y1] = to_pixel((*layers.path)[i], spec, s);
      canvas.line(x0, y0, x1, y1, palette::path);
    }
  }
  if (layers.robot) {
    const auto [x, y] = to_pixel(*layers.robot, spec, s);
    const int rad = std::max(2, s);
    for (int dy = -rad; dy <= rad; ++dy)
      for (int dx = -rad; dx <= rad; ++dx)
        if (dx * dx + dy * dy <= rad * rad) canvas.set(static_cast<int>(x) + dx, static_cast<int>(y) + dy, palette::robot);
  }
  return canvas.take();
}

std::size_t count_color(const pnm::Image& image, const Rgb& color) {
  if (image.channels != 3) return 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i + 2 < image.pixels.size(); i += 3)
    if (image.pixels[i] == color[0] && image.pixels[i + 1] == color[1] && image.pixels[i + 2] == color[2]) ++n;
  return n;
}

}  // namespace scf
