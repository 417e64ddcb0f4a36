#include "scf/scenegen.hpp"

#include "scf/errors.hpp"
#include "scf/parallel.hpp"
#include "scf/pnm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace scf {
namespace {

constexpr int kMaxAttempts = 100;

struct Box {
  double x0, y0, x1, y1;
  bool contains(const Vec2& p, double pad) const {
    return p.x() >= x0 + pad && p.x() <= x1 - pad && p.y() >= y0 + pad && p.y() <= y1 - pad;
  }
};

Box map_box(const GridSpec& g) {
  return {g.center.x - 0.5 * g.extent_x(), g.center.y - 0.5 * g.extent_y(), g.center.x + 0.5 * g.extent_x(),
          g.center.y + 0.5 * g.extent_y()};
}

Vec2 uniform_in(Rng& rng, const Box& b, double pad) {
  const double x = rng.uniform(b.x0 + pad, b.x1 - pad);
  const double y = rng.uniform(b.y0 + pad, b.y1 - pad);
  return {x, y};
}

double draw(Rng& rng, const Range<double>& r) { return r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi); }
int draw(Rng& rng, const Range<int>& r) { return r.lo == r.hi ? r.lo : rng.uniform_int(r.lo, r.hi); }

/// Queue obstacle bounding rectangle in the queue frame, extended by the rear clearance.
struct QueueFootprint {
  double a0, a1, half_width;
};

QueueFootprint footprint(const QueueSpec& q, const GenConfig& cfg) {
  const auto& lab = cfg.label;
  return {-lab.front_cap_extension - lab.wall_thickness, q.rear_axial() + cfg.rear_clearance,
          lab.wall_lateral_offset + lab.wall_thickness};
}

double distance_to_footprint(const QueueSpec& q, const QueueFootprint& f, const Vec2& p) {
  const Vec2 al = q.to_queue_frame(p);
  const double da = std::max({0.0, f.a0 - al.x(), al.x() - f.a1});
  const double dl = std::max(0.0, std::abs(al.y()) - f.half_width);
  return std::hypot(da, dl);
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 1e-12) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 1e-12) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

std::vector<Vec2> QueueSpec::people() const {
  std::vector<Vec2> out;
  out.reserve(gaps.size());
  double axial = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    axial += gaps[i];
    out.push_back(goal.position() + axial * axis + lateral_devs[i] * lateral());
  }
  return out;
}

double QueueSpec::rear_axial() const {
  double axial = 0.0;
  for (double g : gaps) axial += g;
  return axial;
}

Vec2 QueueSpec::to_queue_frame(const Vec2& p) const {
  const Vec2 d = p - goal.position();
  return {d.dot(axis), d.dot(lateral())};
}

std::vector<Vec2> Scenario::all_people() const {
  std::vector<Vec2> out;
  if (queue) out = queue->people();
  for (const auto& g : groups) {
    for (const auto& m : g.members) out.push_back(m.position());
  }
  for (const auto& p : isolated_people) out.push_back(p.position());
  return out;
}

Scenario rotate(const Scenario& s, double angle) {
  Scenario r = s;
  r.goal = rotate(s.goal, angle);
  if (r.queue) {
    r.queue->goal = rotate(s.queue->goal, angle);
    r.queue->axis = rotate(s.queue->axis, angle);
  }
  for (auto& g : r.groups) {
    for (auto& m : g.members) m = rotate(m, angle);
  }
  for (auto& p : r.isolated_people) p = rotate(p, angle);
  r.rotation = wrap_angle(s.rotation + angle);
  return r;
}

// ---------------------------------------------------------------------------
// Config

void GenConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("generator config: " + m); };
  if (!grid.valid()) fail("grid must have positive size and resolution");
  if (people_in_queue.empty() || people_in_queue.lo < 0) fail("people_in_queue must be a nonnegative range");
  if (queue_gap.empty() || queue_gap.lo <= 0.0) fail("queue_gap must be a positive range");
  if (lateral_deviation.empty() || lateral_deviation.lo < 0.0) fail("lateral_deviation must be nonnegative");
  if (number_of_groups.empty() || number_of_groups.lo < 0) fail("number_of_groups must be nonnegative");
  if (people_in_group.empty() || (number_of_groups.hi > 0 && people_in_group.lo < 2))
    fail("people_in_group must be at least 2");
  if (member_spacing.empty() || member_spacing.lo <= 0.0) fail("member_spacing must be a positive range");
  if (isolated_people.empty() || isolated_people.lo < 0) fail("isolated_people must be nonnegative");
  for (double p : {p_goal_only, p_isolated}) {
    if (!(p >= 0.0 && p <= 1.0)) fail("probabilities must lie in [0, 1]");
  }
  if (label.wall_lateral_offset <= person_radius) fail("wall_lateral_offset must exceed person_radius");
  if (label.wall_thickness <= 0.0 || label.front_cap_extension < 0.0 || label.group_dilation < 0.0)
    fail("label geometry must be nonnegative with positive wall thickness");
  if (person_radius < 0.0 || goal_radius < 0.0 || map_margin < 0.0) fail("radii must be nonnegative");

  const double diag = std::hypot(grid.extent_x(), grid.extent_y());
  const double width = 2.0 * (label.wall_lateral_offset + label.wall_thickness);
  if (people_in_queue.hi > 0) {
    const double span = label.front_cap_extension + label.wall_thickness + people_in_queue.hi * queue_gap.hi +
                        rear_clearance;
    if (span + width + 2.0 * map_margin > diag)
      fail("longest queue (" + format_double(span) + " m) cannot fit in the map");
  }
  if (number_of_groups.hi > 0) {
    const double diameter = member_spacing.hi + 2.0 * label.group_dilation;
    if (diameter + 2.0 * map_margin > std::min(grid.extent_x(), grid.extent_y())) fail("groups cannot fit in the map");
    // Hexagonal packing bound for members in a disc of diameter member_spacing.hi.
    const double rr = 0.5 * member_spacing.hi + 0.5 * member_spacing.lo;
    const double cap = 0.9069 * rr * rr / (0.25 * member_spacing.lo * member_spacing.lo);
    if (people_in_group.hi > cap) fail("people_in_group cannot be packed at the requested member_spacing");
  }
}

GenConfig GenConfig::from_keys(KeyValues& kv) {
  GenConfig c;
  c.grid.cells_x = kv.get_int("cells_x", c.grid.cells_x);
  c.grid.cells_y = kv.get_int("cells_y", c.grid.cells_y);
  c.grid.resolution = kv.get_double("resolution", c.grid.resolution);
  c.seed = kv.get_u64("seed", c.seed);
  c.people_in_queue = kv.get_int_range("people_in_queue", c.people_in_queue);
  c.queue_gap = kv.get_double_range("queue_gap", c.queue_gap);
  c.lateral_deviation = kv.get_double_range("lateral_deviation", c.lateral_deviation);
  c.number_of_groups = kv.get_int_range("number_of_groups", c.number_of_groups);
  c.people_in_group = kv.get_int_range("people_in_group", c.people_in_group);
  c.member_spacing = kv.get_double_range("member_spacing", c.member_spacing);
  c.p_goal_only = kv.get_double("p_goal_only", c.p_goal_only);
  c.p_isolated = kv.get_double("p_isolated", c.p_isolated);
  c.isolated_people = kv.get_int_range("isolated_people", c.isolated_people);
  c.label.wall_lateral_offset = kv.get_double("wall_lateral_offset", c.label.wall_lateral_offset);
  c.label.wall_thickness = kv.get_double("wall_thickness", c.label.wall_thickness);
  c.label.front_cap_extension = kv.get_double("front_cap_extension", c.label.front_cap_extension);
  c.label.group_dilation = kv.get_double("group_dilation", c.label.group_dilation);
  c.person_radius = kv.get_double("person_radius", c.person_radius);
  c.goal_radius = kv.get_double("goal_radius", c.goal_radius);
  c.group_clearance = kv.get_double("group_clearance", c.group_clearance);
  c.queue_clearance = kv.get_double("queue_clearance", c.queue_clearance);
  c.isolated_clearance = kv.get_double("isolated_clearance", c.isolated_clearance);
  c.rear_clearance = kv.get_double("rear_clearance", c.rear_clearance);
  c.map_margin = kv.get_double("map_margin", c.map_margin);
  return c;
}

std::string GenConfig::to_text() const {
  std::ostringstream o;
  auto d = [](double v) { return format_double(v); };
  o << "cells_x = " << grid.cells_x << "\n"
    << "cells_y = " << grid.cells_y << "\n"
    << "resolution = " << d(grid.resolution) << "\n"
    << "seed = " << seed << "\n"
    << "people_in_queue = " << format_range(people_in_queue) << "\n"
    << "queue_gap = " << format_range(queue_gap) << "\n"
    << "lateral_deviation = " << format_range(lateral_deviation) << "\n"
    << "number_of_groups = " << format_range(number_of_groups) << "\n"
    << "people_in_group = " << format_range(people_in_group) << "\n"
    << "member_spacing = " << format_range(member_spacing) << "\n"
    << "p_goal_only = " << d(p_goal_only) << "\n"
    << "p_isolated = " << d(p_isolated) << "\n"
    << "isolated_people = " << format_range(isolated_people) << "\n"
    << "wall_lateral_offset = " << d(label.wall_lateral_offset) << "\n"
    << "wall_thickness = " << d(label.wall_thickness) << "\n"
    << "front_cap_extension = " << d(label.front_cap_extension) << "\n"
    << "group_dilation = " << d(label.group_dilation) << "\n"
    << "person_radius = " << d(person_radius) << "\n"
    << "goal_radius = " << d(goal_radius) << "\n"
    << "group_clearance = " << d(group_clearance) << "\n"
    << "queue_clearance = " << d(queue_clearance) << "\n"
    << "isolated_clearance = " << d(isolated_clearance) << "\n"
    << "rear_clearance = " << d(rear_clearance) << "\n"
    << "map_margin = " << d(map_margin) << "\n";
  return o.str();
}

GenConfig load_gen_config(const std::filesystem::path& path) {
  KeyValues kv = KeyValues::load(path);
  GenConfig c = GenConfig::from_keys(kv);
  kv.reject_unknown();
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

std::optional<QueueSpec> sample_queue(Rng& rng, const GenConfig& cfg, double heading, const Box& box) {
  const int n = draw(rng, cfg.people_in_queue);
  if (n <= 0) return std::nullopt;
  QueueSpec q;
  q.axis = {std::cos(heading), std::sin(heading)};
  for (int i = 0; i < n; ++i) {
    q.gaps.push_back(draw(rng, cfg.queue_gap));
    const double mag = draw(rng, cfg.lateral_deviation);
    q.lateral_devs.push_back(rng.bernoulli(0.5) ? mag : -mag);
  }
  // Goal range that keeps the obstacle footprint (plus rear clearance) on the map.
  const QueueFootprint f = footprint(q, cfg);
  double lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
  bool first = true;
  for (double a : {f.a0, f.a1}) {
    for (double l : {-f.half_width, f.half_width}) {
      const Vec2 p = a * q.axis + l * q.lateral();
      if (first) {
        lo_x = hi_x = p.x();
        lo_y = hi_y = p.y();
        first = false;
      }
      lo_x = std::min(lo_x, p.x());
      hi_x = std::max(hi_x, p.x());
      lo_y = std::min(lo_y, p.y());
      hi_y = std::max(hi_y, p.y());
    }
  }
  const double m = cfg.map_margin;
  const double gx0 = box.x0 + m - lo_x, gx1 = box.x1 - m - hi_x;
  const double gy0 = box.y0 + m - lo_y, gy1 = box.y1 - m - hi_y;
  if (gx0 > gx1 || gy0 > gy1) return QueueSpec{};  // empty gaps marks "does not fit"
  q.goal = Pose2(rng.uniform(gx0, gx1), rng.uniform(gy0, gy1), heading + std::numbers::pi);
  return q;
}

std::optional<GroupSpec> sample_group(Rng& rng, const GenConfig& cfg, const Box& box, const Scenario& s,
                                      const std::optional<QueueFootprint>& qf) {
  const int size = draw(rng, cfg.people_in_group);
  const double radius = 0.5 * cfg.member_spacing.hi;
  const double dil = cfg.label.group_dilation;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const Vec2 center = uniform_in(rng, box, radius + dil + cfg.map_margin);
    GroupSpec g;
    for (int m = 0; m < size; ++m) {
      bool placed = false;
      for (int t = 0; t < kMaxAttempts && !placed; ++t) {
        const double r = radius * std::sqrt(rng.uniform());
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const Vec2 p = center + r * Vec2(std::cos(phi), std::sin(phi));
        const bool spaced = std::all_of(g.members.begin(), g.members.end(), [&](const Pose2& o) {
          return (o.position() - p).norm() >= cfg.member_spacing.lo;
        });
        if (spaced) {
          g.members.emplace_back(p, 0.0);
          placed = true;
        }
      }
      if (!placed) break;
    }
    if (static_cast<int>(g.members.size()) != size) continue;

    bool ok = true;
    for (const auto& m : g.members) {
      const Vec2 p = m.position();
      if ((p - s.goal.position()).norm() < cfg.group_clearance) ok = false;
      if (qf && s.queue && distance_to_footprint(*s.queue, *qf, p) < dil + cfg.queue_clearance) ok = false;
      for (const auto& other : s.groups) {
        for (const auto& o : other.members) {
          if ((o.position() - p).norm() < cfg.group_clearance) ok = false;
        }
      }
      if (!ok) break;
    }
    if (ok) return g;
  }
  return std::nullopt;
}

bool place_isolated(Rng& rng, const GenConfig& cfg, const Box& box, Scenario& s,
                    const std::optional<QueueFootprint>& qf) {
  const int count = draw(rng, cfg.isolated_people);
  for (int i = 0; i < count; ++i) {
    bool placed = false;
    for (int t = 0; t < kMaxAttempts && !placed; ++t) {
      const Vec2 p = uniform_in(rng, box, cfg.person_radius + cfg.map_margin);
      bool ok = (p - s.goal.position()).norm() >= cfg.isolated_clearance;
      if (ok && qf && s.queue) ok = distance_to_footprint(*s.queue, *qf, p) >= cfg.isolated_clearance;
      if (ok) {
        for (const auto& o : s.all_people()) {
          if ((o - p).norm() < cfg.isolated_clearance) {
            ok = false;
            break;
          }
        }
      }
      if (ok) {
        s.isolated_people.emplace_back(p, 0.0);
        placed = true;
      }
    }
    if (!placed) return false;
  }
  return true;
}

}  // namespace

Scenario sample_scenario(Rng& rng, const GenConfig& cfg) {
  const Box box = map_box(cfg.grid);
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Scenario s;
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    s.rotation = wrap_angle(heading);
    const bool queues = cfg.people_in_queue.hi > 0;
    // Goal-only samples carry no social instance at all; isolated people may still spawn.
    const bool goal_only = queues && rng.bernoulli(cfg.p_goal_only);
    std::optional<QueueFootprint> qf;
    if (queues && !goal_only) {
      auto q = sample_queue(rng, cfg, heading, box);
      if (q && q->gaps.empty()) continue;  // did not fit
      if (q) {
        qf = footprint(*q, cfg);
        s.goal = q->goal;
        s.queue = std::move(q);
      }
    }
    if (!s.queue) s.goal = Pose2(uniform_in(rng, box, cfg.goal_radius + cfg.map_margin), heading);

    bool ok = true;
    const int groups = cfg.number_of_groups.hi > 0 && !goal_only ? draw(rng, cfg.number_of_groups) : 0;
    for (int g = 0; g < groups && ok; ++g) {
      auto group = sample_group(rng, cfg, box, s, qf);
      if (group) {
        s.groups.push_back(std::move(*group));
      } else {
        ok = false;
      }
    }
    if (!ok) continue;
    if (cfg.isolated_people.hi > 0 && rng.bernoulli(cfg.p_isolated) && !place_isolated(rng, cfg, box, s, qf)) continue;
    return s;
  }
  throw ConfigError("scenario placement failed after " + std::to_string(kMaxAttempts) + " attempts");
}

Scenario sample_scenario_at(const GenConfig& config, std::uint64_t index) {
  Rng rng(derive_seed(config.seed, index));
  return sample_scenario(rng, config);
}

// ---------------------------------------------------------------------------
// Rendering

SocialGridMap render_input(const Scenario& s, const GridSpec& spec, const GenConfig& config) {
  SocialGridMap m(spec);
  for (const auto& p : s.all_people()) rasterize_disc<std::uint8_t>(m.people, spec, p, config.person_radius, 1);
  rasterize_disc<std::uint8_t>(m.goal, spec, s.goal.position(), config.goal_radius, 1);
  return m;
}

bool in_queue_label(const QueueSpec& q, const Vec2& p, const LabelGeometry& label) {
  const Vec2 al = q.to_queue_frame(p);
  const double a = al.x();
  const double l = std::abs(al.y());
  const double inner = label.wall_lateral_offset;
  const double outer = inner + label.wall_thickness;
  const double front = -label.front_cap_extension;
  const bool wall = a >= front && a <= q.rear_axial() && l >= inner && l <= outer;
  const bool cap = a >= front - label.wall_thickness && a < front && l <= outer;
  return wall || cap;
}

CostMap render_label_queue(const QueueSpec& q, const GridSpec& spec, const LabelGeometry& label) {
  CostMap out(spec);
  for (int r = 0; r < spec.cells_y; ++r) {
    for (int c = 0; c < spec.cells_x; ++c) {
      if (in_queue_label(q, cell_to_world({r, c}, spec), label)) out.values(r, c) = 1.0f;
    }
  }
  return out;
}

double distance_to_group_hull(const GroupSpec& g, const Vec2& p) {
  std::vector<Vec2> pts;
  for (const auto& m : g.members) pts.push_back(m.position());
  if (pts.empty()) return std::numeric_limits<double>::infinity();
  const auto hull = convex_hull(pts);
  if (hull.size() < 3) {
    // Degenerate hull: segment over the farthest pair.
    Vec2 a = pts.front(), b = pts.front();
    double best = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        const double d = (pts[i] - pts[j]).squaredNorm();
        if (d > best) {
          best = d;
          a = pts[i];
          b = pts[j];
        }
      }
    }
    return distance_to_segment(p, a, b);
  }
  bool inside = true;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2& a = hull[i];
    const Vec2& b = hull[(i + 1) % hull.size()];
    const double cross = (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
    if (cross < 0.0) inside = false;  // hull is counter-clockwise
    best = std::min(best, distance_to_segment(p, a, b));
  }
  return inside ? 0.0 : best;
}

CostMap render_label_groups(const std::vector<GroupSpec>& groups, const GridSpec& spec, const LabelGeometry& label) {
  CostMap out(spec);
  for (const auto& g : groups) {
    if (g.members.size() < 2) continue;
    Vec2 lo = g.members.front().position(), hi = lo;
    for (const auto& m : g.members) {
      lo = lo.cwiseMin(m.position());
      hi = hi.cwiseMax(m.position());
    }
    const double pad = label.group_dilation + spec.resolution;
    const Cell c0 = clamp_to_grid({lo.x() - pad, hi.y() + pad}, spec);
    const Cell c1 = clamp_to_grid({hi.x() + pad, lo.y() - pad}, spec);
    for (int r = c0.row; r <= c1.row; ++r) {
      for (int c = c0.col; c <= c1.col; ++c) {
        if (distance_to_group_hull(g, cell_to_world({r, c}, spec)) <= label.group_dilation) out.values(r, c) = 1.0f;
      }
    }
  }
  return out;
}

CostMap render_label(const Scenario& s, const GridSpec& spec, const LabelGeometry& label) {
  CostMap out = render_label_groups(s.groups, spec, label);
  if (s.queue) out.values = out.values.max(render_label_queue(*s.queue, spec, label).values);
  return out;
}

Sample make_sample(Rng& rng, const GenConfig& config, const GridSpec& spec) {
  Sample s{sample_scenario(rng, config), SocialGridMap(spec), CostMap(spec)};
  s.input = render_input(s.scenario, spec, config);
  s.label = render_label(s.scenario, spec, config.label);
  return s;
}

Sample make_sample_at(const GenConfig& config, std::uint64_t index) {
  Rng rng(derive_seed(config.seed, index));
  return make_sample(rng, config, config.grid);
}

// ---------------------------------------------------------------------------
// Dataset files

std::string sample_stem(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06llu", static_cast<unsigned long long>(index));
  return buf;
}

DatasetManifest write_dataset(const GenConfig& config, std::uint64_t count, const std::filesystem::path& dir) {
  if (count == 0) throw ConfigError("empty dataset: count must be positive");
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir, "cannot create dataset directory: " + ec.message());

  parallel_for(count, [&](std::size_t i) {
    const Sample s = make_sample_at(config, i);
    const std::string stem = sample_stem(i);
    pnm::write_social_map(s.input, dir / (stem + ".in.ppm"));
    pnm::write_cost_map(s.label, dir / (stem + ".lbl.pgm"));
  });

  DatasetManifest manifest{1, count, config};
  const auto path = dir / "manifest.txt";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path, "cannot write manifest");
  out << "format_version: " << manifest.format_version << "\n" << "count: " << count << "\n";
  std::istringstream cfg(config.to_text());
  std::string line;
  while (std::getline(cfg, line)) {
    const auto eq = line.find(" = ");
    out << line.substr(0, eq) << ": " << line.substr(eq + 3) << "\n";
  }
  if (!out) throw IoError(path, "write failed");
  return manifest;
}

DatasetManifest read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.txt";
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open dataset manifest");
  std::string text, line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    text += line.substr(0, colon) + " = " + line.substr(colon + 1) + "\n";
  }
  KeyValues kv = KeyValues::parse(text, path.string());
  DatasetManifest m;
  m.format_version = kv.get_int("format_version", 0);
  if (m.format_version != 1)
    throw FormatError(FormatError::Kind::version_mismatch, path.string() + ": unsupported dataset format version");
  m.count = kv.get_u64("count", 0);
  m.config = GenConfig::from_keys(kv);
  kv.reject_unknown();
  return m;
}

}  // namespace scf
