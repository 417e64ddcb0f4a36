#pragma once

// Mechanical success judgment of social cost maps: plan on {C_G = 0, C_L =
// people, C_S = prediction} and check the path against the generator labels.

#include "scf/config.hpp"
#include "scf/net.hpp"
#include "scf/planner.hpp"
#include "scf/scenegen.hpp"

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace scf {

enum class Reason { ok, no_path, queue_cut, group_crossed, overtake };
std::string to_string(Reason r);

struct Judgment {
  bool success = false;
  Reason reason = Reason::no_path;
  std::optional<Path> path;
};

enum class Bearing { front, side, rear };
std::string to_string(Bearing b);
constexpr std::array<Bearing, 3> kBearings{Bearing::front, Bearing::side, Bearing::rear};

struct EvalConfig {
  GenConfig generator{};
  std::string name = "eval";
  std::uint64_t samples = 100;  ///< scenarios come from generator.seed, which also drives bearing draws
  double start_distance = 8.0;       ///< meters from the goal
  double rear_margin = 2.0;          ///< rear starts sit at least this far behind the last queued person
  FusionParams fusion{};
  double inflation_radius = 0.0;
  double inflation_peak = 0.5;
  /// Empty: one bearing drawn uniformly per sample.
  std::optional<Bearing> fixed_bearing;

  void validate() const;
  static EvalConfig from_keys(KeyValues& kv);
  std::string to_text() const;
};

EvalConfig load_eval_config(const std::filesystem::path& path);

/// Reference direction of a scenario: the queue axis, else the scenario rotation.
Vec2 scenario_axis(const Scenario& s);

/// Start pose for a bearing; `side_sign` picks the lateral side (+1 or -1).
Vec2 bearing_start(const Scenario& s, Bearing b, double distance, double rear_margin, int side_sign);

/// Nearest cell to p that is non-lethal in field and below 0.5 in label.
std::optional<Cell> project_start(const Vec2& p, const FusedCost& field, const CostMap& label);

/// People discs as a lethal local layer.
CostMap people_layer(const Scenario& s, const GridSpec& spec, double person_radius);

/// Throws std::invalid_argument when the pred spec does not match the config grid.
Judgment judge_static(const CostMap& pred, const Scenario& scenario, const Cell& start, const EvalConfig& cfg);
/// Convenience: bearing start, projected, then judged.
Judgment judge_static(const CostMap& pred, const Scenario& scenario, Bearing bearing, int side_sign,
                      const EvalConfig& cfg);

struct SampleRecord {
  std::uint64_t id = 0;
  Bearing bearing = Bearing::front;
  Judgment judgment;
};

struct TableResult {
  std::vector<SampleRecord> records;
  std::map<Reason, int> histogram;
  double success_rate() const;
};

/// Predictor for a rendered scenario input.
using Predictor = std::function<CostMap(const Scenario&, const SocialGridMap&)>;
Predictor model_predictor(const net::Model<float>& model);
Predictor ground_truth_predictor(const LabelGeometry& label);
Predictor zero_predictor();

/// Samples the test set, predicts, judges one bearing per sample.
TableResult run_table(const Predictor& predictor, const EvalConfig& cfg);

struct AblationRecord {
  std::uint64_t id = 0;
  Judgment with_social;
  Judgment without_social;
};

/// Each scenario judged twice: with `predictor` and with C_S = 0.
std::vector<AblationRecord> ablation(const Predictor& predictor, const EvalConfig& cfg);

enum class SweepAxis { lateral_deviation, spacing };

struct SweepPoint {
  double value = 0.0;
  double success_rate = 0.0;
};

/// Queue-only success rate per parameter value. lateral_deviation sets the range
/// to 0..v; spacing fixes every gap to v.
std::vector<SweepPoint> limitation_sweep(const Predictor& predictor, SweepAxis axis, const std::vector<double>& values,
                                         const EvalConfig& base);

/// "sample_id,bearing,success,reason" lines.
void write_records(const TableResult& r, std::ostream& out);
/// key: value summary mirroring the test-table columns.
void write_summary(const TableResult& r, const EvalConfig& cfg, std::ostream& out);

}  // namespace scf
