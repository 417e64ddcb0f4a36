#include "scf/eval.hpp"

#include "scf/errors.hpp"
#include "scf/parallel.hpp"
#include "scf/rng.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace scf {

std::string to_string(Reason r) {
  switch (r) {
    case Reason::ok: return "ok";
    case Reason::no_path: return "no_path";
    case Reason::queue_cut: return "queue_cut";
    case Reason::group_crossed: return "group_crossed";
    case Reason::overtake: return "overtake";
  }
  return "unknown";
}

std::string to_string(Bearing b) {
  switch (b) {
    case Bearing::front: return "front";
    case Bearing::side: return "side";
    case Bearing::rear: return "rear";
  }
  return "unknown";
}

void EvalConfig::validate() const {
  generator.validate();
  if (samples == 0) throw ConfigError("eval config: samples must be positive");
  if (!(start_distance > 0.0)) throw ConfigError("eval config: start_distance must be positive");
  if (!(rear_margin >= 0.0)) throw ConfigError("eval config: rear_margin must be >= 0");
  if (!(fusion.kappa > 0.0) || !(fusion.lethal_frac > 0.0 && fusion.lethal_frac <= 1.0))
    throw ConfigError("eval config: kappa must be positive and lethal_frac in (0, 1]");
  if (inflation_radius < 0.0 || inflation_peak < 0.0) throw ConfigError("eval config: negative inflation");
}

EvalConfig EvalConfig::from_keys(KeyValues& kv) {
  EvalConfig c;
  c.generator = GenConfig::from_keys(kv);
  c.name = kv.get_string("name", c.name);
  c.samples = kv.get_u64("samples", c.samples);
  c.start_distance = kv.get_double("start_distance", c.start_distance);
  c.rear_margin = kv.get_double("rear_margin", c.rear_margin);
  c.fusion.kappa = kv.get_double("kappa", c.fusion.kappa);
  c.fusion.lethal_frac = kv.get_double("lethal_frac", c.fusion.lethal_frac);
  c.inflation_radius = kv.get_double("inflation_radius", c.inflation_radius);
  c.inflation_peak = kv.get_double("inflation_peak", c.inflation_peak);
  const std::string bearing = kv.get_string("bearing", "random");
  if (bearing == "front") {
    c.fixed_bearing = Bearing::front;
  } else if (bearing == "side") {
    c.fixed_bearing = Bearing::side;
  } else if (bearing == "rear") {
    c.fixed_bearing = Bearing::rear;
  } else if (bearing != "random") {
    throw ConfigError("eval config: bearing must be front, side, rear or random");
  }
  return c;
}

std::string EvalConfig::to_text() const {
  std::ostringstream o;
  o << generator.to_text() << "name = " << name << "\n"
    << "samples = " << samples << "\n"
    << "start_distance = " << format_double(start_distance) << "\n"
    << "rear_margin = " << format_double(rear_margin) << "\n"
    << "kappa = " << format_double(fusion.kappa) << "\n"
    << "lethal_frac = " << format_double(fusion.lethal_frac) << "\n"
    << "inflation_radius = " << format_double(inflation_radius) << "\n"
    << "inflation_peak = " << format_double(inflation_peak) << "\n"
    << "bearing = " << (fixed_bearing ? to_string(*fixed_bearing) : "random") << "\n";
  return o.str();
}

EvalConfig load_eval_config(const std::filesystem::path& path) {
  KeyValues kv = KeyValues::load(path);
  EvalConfig c = EvalConfig::from_keys(kv);
  kv.reject_unknown();
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Judging

Vec2 scenario_axis(const Scenario& s) {
  if (s.queue) return s.queue->axis.normalized();
  return {std::cos(s.rotation), std::sin(s.rotation)};
}

Vec2 bearing_start(const Scenario& s, Bearing b, double distance, double rear_margin, int side_sign) {
  const Vec2 axis = scenario_axis(s);
  const Vec2 lateral(-axis.y(), axis.x());
  const Vec2 goal = s.goal.position();
  switch (b) {
    case Bearing::front: return goal - distance * axis;
    case Bearing::side: return goal + (side_sign < 0 ? -distance : distance) * lateral;
    case Bearing::rear: {
      const double back = s.queue ? std::max(distance, s.queue->rear_axial() + rear_margin) : distance;
      return goal + back * axis;
    }
  }
  return goal;
}

std::optional<Cell> project_start(const Vec2& p, const FusedCost& field, const CostMap& label) {
  const Cell from = clamp_to_grid(p, field.spec);
  return nearest_cell(field.spec, from,
                      [&](const Cell& c) { return !field.is_lethal(c) && label.values(c.row, c.col) < 0.5f; });
}

CostMap people_layer(const Scenario& s, const GridSpec& spec, double person_radius) {
  CostMap out(spec);
  for (const auto& p : s.all_people()) rasterize_disc(out.values, spec, p, person_radius, 1.0f);
  return out;
}

namespace {

struct Judge {
  FusedCost field;
  CostMap queue_label;
  CostMap group_label;
  CostMap label;
};

Judge prepare(const CostMap& pred, const Scenario& scenario, const EvalConfig& cfg) {
  const GridSpec& spec = cfg.generator.grid;
  if (!(pred.spec == spec)) throw std::invalid_argument("judge: prediction grid does not match the test grid");
  CostStack stack(CostMap(spec), people_layer(scenario, spec, cfg.generator.person_radius), pred);
  PlanRequest req{{}, {}, stack, cfg.fusion, cfg.inflation_radius, cfg.inflation_peak};
  Judge j{fuse_request(req), CostMap(spec), render_label_groups(scenario.groups, spec, cfg.generator.label),
          CostMap(spec)};
  if (scenario.queue) j.queue_label = render_label_queue(*scenario.queue, spec, cfg.generator.label);
  j.label.values = j.queue_label.values.max(j.group_label.values);
  return j;
}

Judgment judge(const Judge& j, const Scenario& scenario, const Cell& start) {
  const GridSpec& spec = j.field.spec;
  if (!spec.contains(start)) throw PlanError("judge: start cell out of bounds");
  if (j.field.is_lethal(start)) throw PlanError("judge: start cell is lethal");
  const Cell goal = clamp_to_grid(scenario.goal.position(), spec);
  Judgment out;
  if (j.field.is_lethal(goal)) return out;
  out.path = plan(j.field, start, goal);
  if (!out.path) return out;
  if (!path_clearance(*out.path, j.queue_label, 0.5).clear) {
    out.reason = Reason::queue_cut;
  } else if (!path_clearance(*out.path, j.group_label, 0.5).clear) {
    out.reason = Reason::group_crossed;
  } else {
    out.reason = Reason::ok;
    out.success = true;
  }
  return out;
}

}  // namespace

Judgment judge_static(const CostMap& pred, const Scenario& scenario, const Cell& start, const EvalConfig& cfg) {
  return judge(prepare(pred, scenario, cfg), scenario, start);
}

Judgment judge_static(const CostMap& pred, const Scenario& scenario, Bearing bearing, int side_sign,
                      const EvalConfig& cfg) {
  const Judge j = prepare(pred, scenario, cfg);
  const Vec2 p = bearing_start(scenario, bearing, cfg.start_distance, cfg.rear_margin, side_sign);
  const auto start = project_start(p, j.field, j.label);
  if (!start) return {};
  return judge(j, scenario, *start);
}

// ---------------------------------------------------------------------------
// Experiments

double TableResult::success_rate() const {
  if (records.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& r : records) ok += r.judgment.success ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(records.size());
}

Predictor model_predictor(const net::Model<float>& model) {
  return [&model](const Scenario&, const SocialGridMap& input) { return net::predict(model, input); };
}

Predictor ground_truth_predictor(const LabelGeometry& label) {
  return [label](const Scenario& s, const SocialGridMap& input) { return render_label(s, input.spec, label); };
}

Predictor zero_predictor() {
  return [](const Scenario&, const SocialGridMap& input) { return CostMap(input.spec); };
}

namespace {

constexpr std::uint64_t kBearingStream = 0xBEA41A6ULL;

std::pair<Bearing, int> draw_bearing(const EvalConfig& cfg, std::uint64_t i) {
  Rng rng(derive_seed(cfg.generator.seed ^ kBearingStream, i));
  const Bearing b = cfg.fixed_bearing ? *cfg.fixed_bearing : kBearings[static_cast<std::size_t>(rng.uniform_int(0, 2))];
  const int side = rng.bernoulli(0.5) ? 1 : -1;
  return {b, side};
}

}  // namespace

TableResult run_table(const Predictor& predictor, const EvalConfig& cfg) {
  cfg.validate();
  TableResult result;
  result.records.resize(cfg.samples);
  parallel_for(cfg.samples, [&](std::size_t i) {
    const Scenario s = sample_scenario_at(cfg.generator, i);
    const SocialGridMap input = render_input(s, cfg.generator.grid, cfg.generator);
    const CostMap pred = predictor(s, input);
    const auto [bearing, side] = draw_bearing(cfg, i);
    result.records[i] = {i, bearing, judge_static(pred, s, bearing, side, cfg)};
  });
  for (const auto& r : result.records) ++result.histogram[r.judgment.reason];
  return result;
}

std::vector<AblationRecord> ablation(const Predictor& predictor, const EvalConfig& cfg) {
  cfg.validate();
  std::vector<AblationRecord> out(cfg.samples);
  parallel_for(cfg.samples, [&](std::size_t i) {
    const Scenario s = sample_scenario_at(cfg.generator, i);
    const SocialGridMap input = render_input(s, cfg.generator.grid, cfg.generator);
    const auto [bearing, side] = draw_bearing(cfg, i);
    out[i].id = i;
    out[i].with_social = judge_static(predictor(s, input), s, bearing, side, cfg);
    out[i].without_social = judge_static(CostMap(cfg.generator.grid), s, bearing, side, cfg);
  });
  return out;
}

std::vector<SweepPoint> limitation_sweep(const Predictor& predictor, SweepAxis axis, const std::vector<double>& values,
                                         const EvalConfig& base) {
  std::vector<SweepPoint> out;
  for (double v : values) {
    EvalConfig cfg = base;
    if (axis == SweepAxis::lateral_deviation) {
      cfg.generator.lateral_deviation = {0.0, v};
    } else {
      cfg.generator.queue_gap = {v, v};
    }
    out.push_back({v, run_table(predictor, cfg).success_rate()});
  }
  return out;
}

void write_records(const TableResult& r, std::ostream& out) {
  out << "sample_id,bearing,success,reason\n";
  for (const auto& rec : r.records)
    out << rec.id << "," << to_string(rec.bearing) << "," << (rec.judgment.success ? 1 : 0) << ","
        << to_string(rec.judgment.reason) << "\n";
}

void write_summary(const TableResult& r, const EvalConfig& cfg, std::ostream& out) {
  const GenConfig& g = cfg.generator;
  auto range_or_none = [](const Range<int>& range) { return range.hi <= 0 ? std::string("none") : format_range(range); };
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", r.success_rate());
  out << "dataset: " << cfg.name << "\n"
      << "samples: " << r.records.size() << "\n"
      << "people_in_queue: " << range_or_none(g.people_in_queue) << "\n"
      << "people_in_group: " << (g.number_of_groups.hi <= 0 ? std::string("none") : format_range(g.people_in_group))
      << "\n"
      << "number_of_groups: " << range_or_none(g.number_of_groups) << "\n"
      << "success_rate: " << buf << "\n";
  for (Reason reason : {Reason::ok, Reason::no_path, Reason::queue_cut, Reason::group_crossed, Reason::overtake}) {
    const auto it = r.histogram.find(reason);
    out << "reason_" << to_string(reason) << ": " << (it == r.histogram.end() ? 0 : it->second) << "\n";
  }
}

}  // namespace scf
