#include "scf/config.hpp"
#include "scf/errors.hpp"
#include "scf/geometry.hpp"
#include "scf/pnm.hpp"
#include "scf/raster.hpp"
#include "scf/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace scf;

TEST_CASE("world_to_cell maps the origin to the map center") {
  const GridSpec spec;
  const auto c = world_to_cell(Vec2(0.0, 0.0), spec);
  REQUIRE(c);
  CHECK(c->row == 60);
  CHECK(c->col == 60);
}

TEST_CASE("world_to_cell boundary and out-of-bounds") {
  const GridSpec spec;
  const auto edge = world_to_cell(Vec2(11.9, 0.0), spec);
  REQUIRE(edge);
  CHECK(edge->col == 119);
  CHECK_FALSE(world_to_cell(Vec2(12.1, 0.0), spec));
  CHECK_FALSE(world_to_cell(Vec2(0.0, -12.1), spec));
  CHECK_FALSE(world_to_cell(Vec2(-12.0001, 0.0), spec));
  CHECK_FALSE(world_to_cell(Vec2(std::nan(""), 0.0), spec));
}

TEST_CASE("row 0 is the max-y edge and col 0 the min-x edge") {
  const GridSpec spec;
  const auto top_left = world_to_cell(Vec2(-11.95, 11.95), spec);
  REQUIRE(top_left);
  CHECK(top_left->row == 0);
  CHECK(top_left->col == 0);
}

TEST_CASE("cell_to_world inverts world_to_cell on every cell") {
  GridSpec spec;
  spec.cells_x = 17;
  spec.cells_y = 9;
  spec.resolution = 0.3;
  spec.center = Pose2(1.5, -2.0, 0.0);
  for (int r = 0; r < spec.cells_y; ++r) {
    for (int c = 0; c < spec.cells_x; ++c) {
      const auto back = world_to_cell(cell_to_world({r, c}, spec), spec);
      REQUIRE(back);
      CHECK(back->row == r);
      CHECK(back->col == c);
    }
  }
}

TEST_CASE("wrap_angle stays in [-pi, pi)") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(-50.0, 50.0);
    const double w = wrap_angle(a);
    CHECK(w >= -std::numbers::pi);
    CHECK(w < std::numbers::pi);
    CHECK(std::abs(std::remainder(a - w, 2.0 * std::numbers::pi)) < 1e-9);
  }
  CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(-std::numbers::pi));
}

TEST_CASE("rasterize_disc examples") {
  const GridSpec spec;
  const Vec2 center = cell_to_world({40, 70}, spec);

  auto one = make_raster<float>(spec);
  rasterize_disc(one, spec, center, 0.0, 1.0f);
  CHECK(one.sum() == 1.0f);
  CHECK(one(40, 70) == 1.0f);

  auto plus = make_raster<float>(spec);
  rasterize_disc(plus, spec, center, 0.25, 1.0f);
  CHECK(plus.sum() == 5.0f);
  for (auto [r, c] : {std::pair{40, 70}, {39, 70}, {41, 70}, {40, 69}, {40, 71}}) CHECK(plus(r, c) == 1.0f);

  auto off = make_raster<float>(spec);
  rasterize_disc(off, spec, Vec2(13.0, 0.0), 0.25, 1.0f);
  CHECK(off.sum() == 0.0f);
}

TEST_CASE("rasterize_disc matches enumeration of cell centers") {
  GridSpec spec;
  spec.cells_x = 30;
  spec.cells_y = 30;
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const Vec2 center(rng.uniform(-3.5, 3.5), rng.uniform(-3.5, 3.5));
    const double radius = rng.uniform(0.0, 1.5);
    auto raster = make_raster<std::uint8_t>(spec);
    rasterize_disc(raster, spec, center, radius, std::uint8_t{1});
    for (int r = 0; r < spec.cells_y; ++r) {
      for (int c = 0; c < spec.cells_x; ++c) {
        const double d = (cell_to_world({r, c}, spec) - center).norm();
        if (std::abs(d - radius) < 1e-6) continue;
        CHECK(raster(r, c) == (d < radius ? 1 : 0));
      }
    }
  }
}

TEST_CASE("fuse examples") {
  GridSpec spec;
  spec.cells_x = 4;
  spec.cells_y = 3;
  CostMap g(spec), l(spec), s(spec);

  const FusedCost zero = fuse(CostStack(g, l, s));
  CHECK(zero.entry_cost.abs().maxCoeff() == 0.0);
  CHECK(zero.lethal.cast<int>().sum() == 0);

  s.values(1, 2) = 1.0f;
  const FusedCost one = fuse(CostStack(g, l, s));
  CHECK(one.lethal(1, 2) == 1);
  CHECK(one.entry_cost(1, 2) == doctest::Approx(10.0));
  CHECK(one.lethal.cast<int>().sum() == 1);

  g.values(0, 0) = 0.3f;
  l.values(0, 0) = 0.3f;
  s.values(0, 0) = 0.3f;
  const FusedCost sum = fuse(CostStack(g, l, s));
  CHECK(sum.entry_cost(0, 0) == doctest::Approx(9.0).epsilon(1e-6));
  CHECK(sum.lethal(0, 0) == 1);
}

TEST_CASE("fuse saturates and thresholds at lethal_frac") {
  GridSpec spec;
  spec.cells_x = 3;
  spec.cells_y = 1;
  CostMap g(spec), l(spec), s(spec);
  g.values << 0.9f, 0.5f, 0.1f;
  l.values << 0.9f, 0.27f, 0.1f;
  const FusedCost f = fuse(CostStack(g, l, s));
  CHECK(f.entry_cost(0, 0) == doctest::Approx(10.0));
  CHECK(f.lethal(0, 0) == 1);
  CHECK(f.lethal(0, 1) == 0);
  CHECK(f.entry_cost(0, 2) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(f.lethal(0, 2) == 0);
}

TEST_CASE("fuse rejects mismatched layers and bad parameters") {
  GridSpec a, b;
  b.cells_x = 10;
  CHECK_THROWS_AS(fuse(CostStack(CostMap(a), CostMap(b), CostMap(a))), std::invalid_argument);
  CHECK_THROWS_AS(fuse(CostStack(CostMap(a), CostMap(a), CostMap(a)), FusionParams{0.0, 0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(fuse(CostStack(CostMap(a), CostMap(a), CostMap(a)), FusionParams{10.0, 1.5}),
                  std::invalid_argument);
}

TEST_CASE("inflation adds a decaying halo around lethal cells only") {
  GridSpec spec;
  spec.cells_x = 9;
  spec.cells_y = 9;
  CostMap s(spec);
  s.values(4, 4) = 1.0f;
  FusedCost f = fuse(CostStack(CostMap(spec), CostMap(spec), s));
  inflate(f, 0.5, 0.5, 10.0);
  CHECK(f.entry_cost(4, 4) == doctest::Approx(10.0));
  CHECK(f.entry_cost(4, 5) == doctest::Approx(5.0 * (1.0 - 0.2 / 0.5)));
  CHECK(f.entry_cost(4, 7) == 0.0);
  CHECK(f.lethal.cast<int>().sum() == 1);
}

TEST_CASE("pnm: zero cost map encodes to zero bytes") {
  const CostMap zero{GridSpec{}};
  const auto bytes = pnm::encode(pnm::to_image(zero));
  const std::string header = "P5\n120 120\n255\n";
  REQUIRE(bytes.size() == header.size() + 14400);
  CHECK(std::string(bytes.begin(), bytes.begin() + header.size()) == header);
  for (std::size_t i = header.size(); i < bytes.size(); ++i) REQUIRE(bytes[i] == 0);
}

TEST_CASE("pnm: cost 1 encodes to 255 and round trip is within quantization") {
  GridSpec spec;
  spec.cells_x = 23;
  spec.cells_y = 17;
  CostMap m(spec);
  Rng rng(5);
  for (Eigen::Index i = 0; i < m.values.size(); ++i) m.values.data()[i] = static_cast<float>(rng.uniform());
  m.values(0, 0) = 1.0f;
  const auto image = pnm::to_image(m);
  CHECK(image.pixels[0] == 255);
  const CostMap back = pnm::to_cost_map(pnm::decode(pnm::encode(image)), spec.resolution);
  CHECK(back.spec == spec);
  CHECK((back.values - m.values).abs().maxCoeff() <= 1.0f / (2.0f * 255.0f) + 1e-6f);
}

TEST_CASE("pnm: social map round trip through a file") {
  GridSpec spec;
  spec.cells_x = 12;
  spec.cells_y = 8;
  SocialGridMap m(spec);
  m.people(2, 3) = 1;
  m.people(7, 11) = 1;
  m.goal(0, 5) = 1;
  const auto path = std::filesystem::temp_directory_path() / "scf_test_grid_social.ppm";
  pnm::write_social_map(m, path);
  const SocialGridMap back = pnm::read_social_map(path);
  std::filesystem::remove(path);
  CHECK(back.spec == spec);
  CHECK((back.people == m.people).all());
  CHECK((back.goal == m.goal).all());
}

TEST_CASE("pnm: decode errors are distinct") {
  auto kind_of = [](const std::string& text) {
    const std::vector<std::uint8_t> bytes(text.begin(), text.end());
    try {
      pnm::decode(bytes);
    } catch (const FormatError& e) {
      return e.kind();
    }
    FAIL("decode accepted malformed input");
    return FormatError::Kind::unsupported;
  };
  CHECK(kind_of("P3\n2 2\n255\n....") == FormatError::Kind::bad_magic);
  CHECK(kind_of("P5\n2 x\n255\n....") == FormatError::Kind::malformed_header);
  CHECK(kind_of("P5\n2 2\n255\n...") == FormatError::Kind::truncated);
  CHECK(kind_of("P5\n2 2\n65535\n........") == FormatError::Kind::unsupported);
}

TEST_CASE("pnm: header comments are skipped") {
  const std::string text = "P5\n# made by hand\n2 1\n255\n";
  std::vector<std::uint8_t> bytes(text.begin(), text.end());
  bytes.push_back(0);
  bytes.push_back(255);
  const auto image = pnm::decode(bytes);
  CHECK(image.width == 2);
  CHECK(image.height == 1);
  CHECK(image.pixels[1] == 255);
}

TEST_CASE("pnm: reading a missing file is an I/O error") {
  CHECK_THROWS_AS(pnm::read("/nonexistent/dir/x.pgm"), IoError);
}

TEST_CASE("config: ranges, comments and unknown keys") {
  KeyValues kv = KeyValues::parse("# comment\na = 2..5\nb = 0.5\nc = 3\n");
  CHECK(kv.get_int_range("a", {}) == Range<int>{2, 5});
  CHECK(kv.get_double_range("b", {}) == Range<double>{0.5, 0.5});
  CHECK_THROWS_AS(kv.reject_unknown(), ConfigError);
  CHECK(kv.get_int("c", 0) == 3);
  CHECK_NOTHROW(kv.reject_unknown());
  KeyValues bad = KeyValues::parse("x = abc\n");
  CHECK_THROWS_AS(bad.get_double("x", 0.0), ConfigError);
}
