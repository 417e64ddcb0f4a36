#include "scf/social_source.hpp"

namespace scf {

CostMap ModelSource::social_cost(const SocialGridMap& input, const Scenario&) const {
  return net::predict(model_, input);
}

CostMap GroundTruthSource::social_cost(const SocialGridMap& input, const Scenario& truth) const {
  return render_label(truth, input.spec, label_);
}

CostMap NoSocialSource::social_cost(const SocialGridMap& input, const Scenario&) const { return CostMap(input.spec); }

}  // namespace scf
