// scf: dataset generation, training, inference, planning, simulation,
// evaluation and rendering for learned social cost maps.

#include "scf/errors.hpp"
#include "scf/eval.hpp"
#include "scf/net.hpp"
#include "scf/planner.hpp"
#include "scf/pnm.hpp"
#include "scf/render.hpp"
#include "scf/scenegen.hpp"
#include "scf/sim.hpp"
#include "scf/train.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace fs = std::filesystem;
using namespace scf;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kIo = 3, kNoPath = 4, kFormat = 5 };

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
};

KeyValues load_keys(const Common& c) {
  KeyValues kv = c.config.empty() ? KeyValues{} : KeyValues::load(c.config);
  if (c.seed_set) kv.set("seed", std::to_string(c.seed));
  return kv;
}

fs::path ensure_out(const Common& c) {
  if (c.out.empty()) throw ConfigError("--out is required");
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw IoError(c.out, "cannot create output directory: " + ec.message());
  return c.out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out << text;
  if (!out) throw IoError(path, "write failed");
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Configuration file (key = value)");
  app->add_option_function<std::uint64_t>(
      "--seed", [&c](std::uint64_t s) { c.seed = s, c.seed_set = true; }, "Global seed override");
  app->add_option("--out", c.out, "Output directory");
}

// --------------------------------------------------------------------------

int cmd_gen_data(const Common& c, std::uint64_t count) {
  KeyValues kv = load_keys(c);
  GenConfig cfg = GenConfig::from_keys(kv);
  kv.reject_unknown();
  cfg.validate();
  const fs::path out = ensure_out(c);
  write_dataset(cfg, count, out);
  write_text(out / "resolved_config.txt", cfg.to_text() + "count = " + std::to_string(count) + "\n");
  std::printf("wrote %llu samples to %s\n", static_cast<unsigned long long>(count), out.c_str());
  return kOk;
}

int cmd_train(const Common& c, const std::string& data_dir, bool resume) {
  if (resume) throw FormatError(FormatError::Kind::unsupported, "train: --resume is unsupported");
  KeyValues kv = load_keys(c);
  TrainConfig cfg = TrainConfig::from_keys(kv);
  const std::string arch = kv.get_string("architecture", "reference");
  kv.reject_unknown();
  cfg.validate();
  if (arch != "reference") throw ConfigError("train: unknown architecture '" + arch + "'");
  const DatasetReader data(data_dir);
  const fs::path out = ensure_out(c);
  write_text(out / "resolved_config.txt", cfg.to_text() + "architecture = " + arch + "\ndata = " + data_dir + "\n");

  auto model = initial_model(data.spec(), cfg.seed);
  std::ofstream log(out / "loss.csv", std::ios::trunc);
  if (!log) throw IoError(out / "loss.csv", "cannot open for writing");
  log << "epoch,step,loss\n";
  double window = 0.0;
  int in_window = 0;
  const auto result = train(std::move(model), data, cfg, [&](const LossRecord& r) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d,%lld,%.8f\n", r.epoch, static_cast<long long>(r.step), r.loss);
    log << buf << std::flush;
    window += r.loss;
    if (++in_window == 50) {
      std::fprintf(stderr, "epoch %d step %lld loss %.5f\n", r.epoch, static_cast<long long>(r.step),
                   window / in_window);
      window = 0.0;
      in_window = 0;
    }
  });
  net::save_weights(result.model, out / "weights.scf");
  std::printf("trained %zu steps; weights in %s\n", result.log.size(), (out / "weights.scf").c_str());
  return kOk;
}

int cmd_predict(const Common& c, const std::string& weights, const std::string& input) {
  KeyValues kv = load_keys(c);
  kv.reject_unknown();
  const auto model = net::load_weights(weights);
  const SocialGridMap map = pnm::read_social_map(input, model.input.resolution);
  const CostMap cost = net::predict(model, map);
  const fs::path out = ensure_out(c);
  const fs::path target = out / (fs::path(input).stem().stem().string() + ".pred.pgm");
  pnm::write_cost_map(cost, target);
  write_text(out / "resolved_config.txt", "weights = " + weights + "\ninput = " + input + "\n");
  std::printf("%s\n", target.c_str());
  return kOk;
}


Cell parse_cell(const std::string& text, const char* what) {
  int r = 0, c = 0;
  char comma = 0;
  std::istringstream in(text);
  if (!(in >> r >> comma >> c) || comma != ',' || !(in >> std::ws).eof())
    throw ConfigError(std::string(what) + " must be written row,col");
  return {r, c};
}

Bearing parse_bearing(const std::string& name) {
  for (Bearing b : kBearings)
    if (to_string(b) == name) return b;
  throw ConfigError("bearing must be front, side or rear, got '" + name + "'");
}

// Cost layers from P5 files; absent layers are zero on the grid of the first present one.
int cmd_plan(const Common& c, const std::string& global, const std::string& local, const std::string& social,
             const std::string& start_text, const std::string& goal_text) {
  KeyValues kv = load_keys(c);
  const double resolution = kv.get_double("resolution", 0.2);
  FusionParams fusion;
  fusion.kappa = kv.get_double("kappa", fusion.kappa);
  fusion.lethal_frac = kv.get_double("lethal_frac", fusion.lethal_frac);
  const double inflation_radius = kv.get_double("inflation_radius", 0.0);
  const double inflation_peak = kv.get_double("inflation_peak", 0.5);
  kv.reject_unknown();
  if (!(fusion.kappa > 0.0) || !(fusion.lethal_frac > 0.0 && fusion.lethal_frac <= 1.0))
    throw ConfigError("plan: kappa must be positive and lethal_frac in (0, 1]");

  std::optional<CostMap> layers[3];
  const std::string* paths[3] = {&global, &local, &social};
  std::optional<GridSpec> spec;
  for (int i = 0; i < 3; ++i) {
    if (paths[i]->empty()) continue;
    layers[i] = pnm::read_cost_map(*paths[i], resolution);
    if (!spec) spec = layers[i]->spec;
    if (!(layers[i]->spec == *spec)) throw ConfigError("plan: cost layers have different dimensions");
  }
  if (!spec) throw ConfigError("plan: at least one of --global, --local, --social is required");
  for (auto& l : layers)
    if (!l) l = CostMap(*spec);

  PlanRequest req{parse_cell(start_text, "--start"), parse_cell(goal_text, "--goal"),
                  CostStack(*layers[0], *layers[1], *layers[2]), fusion, inflation_radius, inflation_peak};
  const fs::path out = ensure_out(c);
  std::ostringstream resolved;
  resolved << "resolution = " << format_double(resolution) << "\nkappa = " << format_double(fusion.kappa)
           << "\nlethal_frac = " << format_double(fusion.lethal_frac)
           << "\ninflation_radius = " << format_double(inflation_radius)
           << "\ninflation_peak = " << format_double(inflation_peak) << "\nglobal = " << global << "\nlocal = " << local
           << "\nsocial = " << social << "\nstart = " << start_text << "\ngoal = " << goal_text << "\n";
  write_text(out / "resolved_config.txt", resolved.str());

  const FusedCost field = fuse_request(req);
  if (!field.spec.contains(req.start) || !field.spec.contains(req.goal))
    throw ConfigError("plan: start or goal outside the grid");
  if (field.is_lethal(req.start) || field.is_lethal(req.goal)) {
    std::fprintf(stderr, "no path: %s cell is lethal\n", field.is_lethal(req.start) ? "start" : "goal");
    return kNoPath;
  }
  const auto path = plan(field, req.start, req.goal);
  if (!path) {
    std::fprintf(stderr, "no path: goal unreachable\n");
    return kNoPath;
  }
  std::ofstream f(out / "path.txt", std::ios::trunc);
  if (!f) throw IoError(out / "path.txt", "cannot open for writing");
  write_path(*path, f);
  std::printf("total_cost: %.6f cells: %zu\n", path->total_cost, path->cells.size());
  return kOk;
}

struct SceneChoice {
  std::uint64_t index = 0;
  Bearing bearing = Bearing::rear;
  int side = 1;
  double start_distance = 8.0;
  double rear_margin = 2.0;

  static SceneChoice from_keys(KeyValues& kv, Bearing fallback) {
    SceneChoice s;
    s.index = kv.get_u64("scenario_index", s.index);
    s.bearing = parse_bearing(kv.get_string("bearing", to_string(fallback)));
    s.side = kv.get_int("side", s.side) < 0 ? -1 : 1;
    s.start_distance = kv.get_double("start_distance", s.start_distance);
    s.rear_margin = kv.get_double("rear_margin", s.rear_margin);
    return s;
  }
  std::string to_text() const {
    std::ostringstream o;
    o << "scenario_index = " << index << "\nbearing = " << to_string(bearing) << "\nside = " << side
      << "\nstart_distance = " << format_double(start_distance) << "\nrear_margin = " << format_double(rear_margin)
      << "\n";
    return o.str();
  }
};

std::unique_ptr<SocialCostSource> make_source(const std::string& kind, const std::string& weights,
                                              const LabelGeometry& label, const GridSpec& grid) {
  if (kind == "ground_truth") return std::make_unique<GroundTruthSource>(label);
  if (kind == "none") return std::make_unique<NoSocialSource>();
  if (kind != "model") throw ConfigError("source must be model, ground_truth or none");
  if (weights.empty()) throw ConfigError("source = model needs --weights");
  auto model = net::load_weights(weights);
  if (model.input.width != grid.cells_x || model.input.height != grid.cells_y)
    throw ConfigError("weights were trained for a different grid");
  return std::make_unique<ModelSource>(std::move(model));
}

int cmd_simulate(const Common& c, const std::string& weights, bool frames) {
  KeyValues kv = load_keys(c);
  const GenConfig gen = GenConfig::from_keys(kv);
  SimConfig sim = SimConfig::from_keys(kv);
  const SceneChoice scene = SceneChoice::from_keys(kv, Bearing::rear);
  const std::string source_kind = kv.get_string("source", weights.empty() ? "ground_truth" : "model");
  kv.reject_unknown();
  gen.validate();
  sim.grid = gen.grid;
  sim.label = gen.label;
  sim.validate();
  const auto source = make_source(source_kind, weights, sim.label, sim.grid);

  const Scenario scenario = sample_scenario_at(gen, scene.index);
  const Vec2 start = bearing_start(scenario, scene.bearing, scene.start_distance, scene.rear_margin, scene.side);
  const fs::path out = ensure_out(c);
  write_text(out / "resolved_config.txt",
             gen.to_text() + sim.to_text() + scene.to_text() + "source = " + source_kind + "\n");

  if (frames) fs::create_directories(out / "frames");
  int frame = 0;
  ReplanHook hook;
  if (frames) {
    hook = [&](const SimState& state, const SocialGridMap& input, const CostMap& social, const FusedCost& field) {
      const CostMap label = render_label(state.truth(), sim.grid, sim.label);
      std::vector<Vec2> path{state.robot};
      path.insert(path.end(), state.waypoints.begin(), state.waypoints.end());
      RenderLayers layers;
      layers.spec = sim.grid;
      layers.input = &input;
      layers.cost = &social;
      layers.fused = &field;
      layers.label = &label;
      layers.path = &path;
      layers.robot = state.robot;
      char name[32];
      std::snprintf(name, sizeof name, "frame_%05d.ppm", frame++);
      pnm::write(render(layers), out / "frames" / name);
    };
  }
  const EpisodeTrace trace = run_episode(scenario, start, sim, *source, hook);
  std::ofstream f(out / "trace.csv", std::ios::trunc);
  if (!f) throw IoError(out / "trace.csv", "cannot open for writing");
  write_trace(trace, f);
  std::printf("outcome: %s%s%s ticks: %d services: %d waits: %d replans: %d\n", to_string(trace.outcome).c_str(),
              trace.violation.empty() ? "" : " ", trace.violation.c_str(), trace.ticks, trace.services, trace.waits,
              trace.replans);
  return kOk;
}

int cmd_evaluate(const Common& c, const std::string& weights) {
  KeyValues kv = load_keys(c);
  const EvalConfig cfg = EvalConfig::from_keys(kv);
  const std::string kind = kv.get_string("predictor", weights.empty() ? "ground_truth" : "model");
  kv.reject_unknown();
  cfg.validate();
  std::optional<net::Model<float>> model;
  Predictor predictor;
  if (kind == "model") {
    if (weights.empty()) throw ConfigError("predictor = model needs --weights");
    model = net::load_weights(weights);
    predictor = model_predictor(*model);
  } else if (kind == "ground_truth") {
    predictor = ground_truth_predictor(cfg.generator.label);
  } else if (kind == "zero") {
    predictor = zero_predictor();
  } else {
    throw ConfigError("predictor must be model, ground_truth or zero");
  }
  const fs::path out = ensure_out(c);
  write_text(out / "resolved_config.txt",
             cfg.to_text() + "predictor = " + kind + "\nweights = " + weights + "\n");
  const TableResult result = run_table(predictor, cfg);
  std::ofstream rec(out / "records.csv", std::ios::trunc);
  if (!rec) throw IoError(out / "records.csv", "cannot open for writing");
  write_records(result, rec);
  std::ostringstream summary;
  write_summary(result, cfg, summary);
  write_text(out / "summary.txt", summary.str());
  std::fputs(summary.str().c_str(), stdout);
  return kOk;
}

int cmd_render(const Common& c, const std::string& weights, int scale) {
  KeyValues kv = load_keys(c);
  const GenConfig gen = GenConfig::from_keys(kv);
  const SceneChoice scene = SceneChoice::from_keys(kv, Bearing::front);
  const std::string kind = kv.get_string("source", weights.empty() ? "ground_truth" : "model");
  FusionParams fusion;
  fusion.kappa = kv.get_double("kappa", fusion.kappa);
  fusion.lethal_frac = kv.get_double("lethal_frac", fusion.lethal_frac);
  kv.reject_unknown();
  gen.validate();
  if (scale < 1 || scale > 32) throw ConfigError("--scale must be in 1..32");

  const Scenario s = sample_scenario_at(gen, scene.index);
  const SocialGridMap input = render_input(s, gen.grid, gen);
  const CostMap label = render_label(s, gen.grid, gen.label);
  CostMap social(gen.grid);
  if (kind == "model") {
    if (weights.empty()) throw ConfigError("source = model needs --weights");
    social = net::predict(net::load_weights(weights), input);
  } else if (kind == "ground_truth") {
    social = label;
  } else if (kind != "none") {
    throw ConfigError("source must be model, ground_truth or none");
  }
  EvalConfig ecfg;
  ecfg.generator = gen;
  ecfg.fusion = fusion;
  ecfg.start_distance = scene.start_distance;
  ecfg.rear_margin = scene.rear_margin;
  const Judgment j = judge_static(social, s, scene.bearing, scene.side, ecfg);

  CostStack stack(CostMap(gen.grid), people_layer(s, gen.grid, gen.person_radius), social);
  const FusedCost field = fuse(stack, fusion);
  RenderLayers layers;
  layers.spec = gen.grid;
  layers.input = &input;
  layers.fused = &field;
  layers.label = &label;
  layers.scale = scale;
  if (j.path) {
    layers.path = &j.path->poses;
    layers.robot = j.path->poses.front();
  }
  const fs::path out = ensure_out(c);
  write_text(out / "resolved_config.txt", gen.to_text() + scene.to_text() + "source = " + kind +
                                              "\nkappa = " + format_double(fusion.kappa) +
                                              "\nlethal_frac = " + format_double(fusion.lethal_frac) + "\n");
  pnm::write(render(layers), out / "scene.ppm");
  std::printf("%s judgment: %s\n", (out / "scene.ppm").c_str(), to_string(j.reason).c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned social cost maps for grid navigation"};
  app.require_subcommand(1);

  Common common;
  std::uint64_t count = 0;
  std::string data_dir, weights, input;
  bool resume = false;

  auto* gen = app.add_subcommand("gen-data", "Generate a labelled dataset");
  add_common(gen, common);
  gen->add_option("--count", count, "Number of samples")->required();

  auto* tr = app.add_subcommand("train", "Train the cost network");
  add_common(tr, common);
  tr->add_option("--data", data_dir, "Dataset directory")->required();
  tr->add_flag("--resume", resume, "Resume a previous run (unsupported)");

  auto* pr = app.add_subcommand("predict", "Predict a social cost map");
  add_common(pr, common);
  pr->add_option("--weights", weights, "Weight file")->required();
  pr->add_option("--input", input, "Social grid map (P6)")->required();

  std::string global, local, social, start, goal;
  auto* pl = app.add_subcommand("plan", "Plan over P5 cost layers");
  add_common(pl, common);
  pl->add_option("--global", global, "Global cost layer (P5)");
  pl->add_option("--local", local, "Local cost layer (P5)");
  pl->add_option("--social", social, "Social cost layer (P5)");
  pl->add_option("--start", start, "Start cell row,col")->required();
  pl->add_option("--goal", goal, "Goal cell row,col")->required();

  bool frames = false;
  auto* si = app.add_subcommand("simulate", "Run one simulated episode");
  add_common(si, common);
  si->add_option("--weights", weights, "Weight file for source = model");
  si->add_flag("--frames", frames, "Write a P6 frame after every replan");

  auto* ev = app.add_subcommand("evaluate", "Judge a test set and write a summary");
  add_common(ev, common);
  ev->add_option("--weights", weights, "Weight file for predictor = model");

  int scale = 4;
  auto* re = app.add_subcommand("render", "Render a generated scenario with its planned path");
  add_common(re, common);
  re->add_option("--weights", weights, "Weight file for source = model");
  re->add_option("--scale", scale, "Pixels per cell");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) return cmd_gen_data(common, count);
    if (*tr) return cmd_train(common, data_dir, resume);
    if (*pr) return cmd_predict(common, weights, input);
    if (*pl) return cmd_plan(common, global, local, social, start, goal);
    if (*si) return cmd_simulate(common, weights, frames);
    if (*ev) return cmd_evaluate(common, weights);
    if (*re) return cmd_render(common, weights, scale);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIo;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return kFormat;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
  return kOther;
}
