#pragma once

// Binary portable graymap (P5) and pixmap (P6) I/O, maxval 255, rows top first.
// Cost maps travel as P5 (byte = round(255 * cost)); social grid maps as P6
// with red = people, green = goal, blue = 0.

#include "scf/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace scf::pnm {

struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;  ///< 1 for P5, 3 for P6
  std::vector<std::uint8_t> pixels;  ///< interleaved, row-major
};

std::vector<std::uint8_t> encode(const Image& image);
/// Throws FormatError with kind bad_magic, malformed_header, truncated or unsupported.
Image decode(std::span<const std::uint8_t> bytes);

Image read(const std::filesystem::path& path);
void write(const Image& image, const std::filesystem::path& path);

Image to_image(const CostMap& map);
/// Builds a cost map from a P5 image; spec dimensions are taken from the image.
CostMap to_cost_map(const Image& image, double resolution = 0.2);

Image to_image(const SocialGridMap& map);
/// Channel bytes >= 128 count as set.
SocialGridMap to_social_map(const Image& image, double resolution = 0.2);

inline void write_cost_map(const CostMap& map, const std::filesystem::path& path) { write(to_image(map), path); }
inline CostMap read_cost_map(const std::filesystem::path& path, double resolution = 0.2) {
  return to_cost_map(read(path), resolution);
}
inline void write_social_map(const SocialGridMap& map, const std::filesystem::path& path) {
  write(to_image(map), path);
}
inline SocialGridMap read_social_map(const std::filesystem::path& path, double resolution = 0.2) {
  return to_social_map(read(path), resolution);
}

}  // namespace scf::pnm
