#include "scf/pnm.hpp"

#include "scf/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

namespace scf::pnm {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  int next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) throw FormatError(FormatError::Kind::malformed_header, "pnm: header ends early");
    if (!std::isdigit(bytes_[pos_])) throw FormatError(FormatError::Kind::malformed_header, "pnm: expected integer");
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (value > (1L << 24)) throw FormatError(FormatError::Kind::malformed_header, "pnm: header value too large");
    }
    return static_cast<int>(value);
  }

  /// Exactly one whitespace byte separates maxval from the payload.
  std::size_t payload_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw FormatError(FormatError::Kind::malformed_header, "pnm: missing separator before payload");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

std::vector<std::uint8_t> encode(const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw std::invalid_argument("pnm: channels must be 1 or 3");
  const std::string header = std::string(image.channels == 1 ? "P5" : "P6") + "\n" + std::to_string(image.width) +
                             " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

Image decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw FormatError(FormatError::Kind::bad_magic, "pnm: expected P5 or P6 magic");
  Image image;
  image.channels = bytes[1] == '5' ? 1 : 3;
  HeaderReader header(bytes);
  image.width = header.next_int();
  image.height = header.next_int();
  const int maxval = header.next_int();
  if (image.width <= 0 || image.height <= 0)
    throw FormatError(FormatError::Kind::malformed_header, "pnm: non-positive dimensions");
  if (maxval != 255) throw FormatError(FormatError::Kind::unsupported, "pnm: only maxval 255 is supported");
  const std::size_t offset = header.payload_offset();
  const std::size_t need = static_cast<std::size_t>(image.width) * image.height * image.channels;
  if (bytes.size() < offset + need)
    throw FormatError(FormatError::Kind::truncated, "pnm: payload truncated (" + std::to_string(bytes.size() - offset) +
                                                        " of " + std::to_string(need) + " bytes)");
  image.pixels.assign(bytes.begin() + offset, bytes.begin() + offset + need);
  return image;
}

Image read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode(bytes);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path.string() + ": " + e.what());
  }
}

void write(const Image& image, const std::filesystem::path& path) {
  const auto bytes = encode(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path, "write failed");
}

Image to_image(const CostMap& map) {
  Image image{map.spec.cells_x, map.spec.cells_y, 1, {}};
  image.pixels.resize(static_cast<std::size_t>(map.spec.cell_count()));
  for (int r = 0; r < map.spec.cells_y; ++r) {
    for (int c = 0; c < map.spec.cells_x; ++c) {
      const double v = std::clamp(static_cast<double>(map.values(r, c)), 0.0, 1.0);
      image.pixels[static_cast<std::size_t>(r) * map.spec.cells_x + c] =
          static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  return image;
}

CostMap to_cost_map(const Image& image, double resolution) {
  if (image.channels != 1) throw FormatError(FormatError::Kind::unsupported, "pnm: cost maps must be P5 graymaps");
  GridSpec spec{image.width, image.height, resolution, {}};
  CostMap map(spec);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c)
      map.values(r, c) = static_cast<float>(image.pixels[static_cast<std::size_t>(r) * image.width + c] / 255.0);
  }
  return map;
}

Image to_image(const SocialGridMap& map) {
  Image image{map.spec.cells_x, map.spec.cells_y, 3, {}};
  image.pixels.assign(static_cast<std::size_t>(map.spec.cell_count()) * 3, 0);
  for (int r = 0; r < map.spec.cells_y; ++r) {
    for (int c = 0; c < map.spec.cells_x; ++c) {
      const std::size_t i = (static_cast<std::size_t>(r) * map.spec.cells_x + c) * 3;
      image.pixels[i] = map.people(r, c) ? 255 : 0;
      image.pixels[i + 1] = map.goal(r, c) ? 255 : 0;
    }
  }
  return image;
}

SocialGridMap to_social_map(const Image& image, double resolution) {
  if (image.channels != 3)
    throw FormatError(FormatError::Kind::unsupported, "pnm: social grid maps must be P6 pixmaps");
  SocialGridMap map(GridSpec{image.width, image.height, resolution, {}});
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      const std::size_t i = (static_cast<std::size_t>(r) * image.width + c) * 3;
      map.people(r, c) = image.pixels[i] >= 128 ? 1 : 0;
      map.goal(r, c) = image.pixels[i + 1] >= 128 ? 1 : 0;
    }
  }
  return map;
}

}  // namespace scf::pnm
