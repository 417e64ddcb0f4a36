#pragma once

// Producers of the social cost layer C_S used by the simulator and evaluator.

#include "scf/net.hpp"
#include "scf/raster.hpp"
#include "scf/scenegen.hpp"

#include <memory>
#include <string>

namespace scf {

class SocialCostSource {
 public:
  virtual ~SocialCostSource() = default;
  /// input is the sensed social grid map; truth is the current true scene.
  virtual CostMap social_cost(const SocialGridMap& input, const Scenario& truth) const = 0;
  virtual std::string name() const = 0;
};

/// C_S = f_S(M_S).
class ModelSource : public SocialCostSource {
 public:
  explicit ModelSource(net::Model<float> model) : model_(std::move(model)) {}
  CostMap social_cost(const SocialGridMap& input, const Scenario& truth) const override;
  std::string name() const override { return "model"; }

 private:
  net::Model<float> model_;
};

/// Generator label of the current true scene.
class GroundTruthSource : public SocialCostSource {
 public:
  explicit GroundTruthSource(LabelGeometry label = {}) : label_(label) {}
  CostMap social_cost(const SocialGridMap& input, const Scenario& truth) const override;
  std::string name() const override { return "ground_truth"; }

 private:
  LabelGeometry label_;
};

/// C_S = 0.
class NoSocialSource : public SocialCostSource {
 public:
  CostMap social_cost(const SocialGridMap& input, const Scenario& truth) const override;
  std::string name() const override { return "none"; }
};

}  // namespace scf
