#pragma once

#include <memory>

#include "greensec/nets.hpp"
#include "greensec/policy.hpp"

namespace greensec {

// action = min(1, budget * softmax(logits)), columnwise over samples.
// The sum never exceeds the budget and clipping only creates slack, which is
// legal under the sum <= B constraint.
Mat budget_softmax(const Mat& logits, double budget, Mat* softmax_out = nullptr);
// dL/dlogits given dL/daction and the stored softmax columns.
Mat budget_softmax_backward(const Mat& g_action, const Mat& softmax, double budget);

// Feature layout fed to actor/critic networks:
//   [ theta_norm (N, theta-conditioned nets only) ; past_effort (N) ;
//     wildlife / wildlife_norm (N) ; t / T ]
struct FeatureSpec {
  int n_targets = 0;
  int horizon = 0;
  double budget = 0.0;
  double wildlife_norm = 1.0;  // max_i initial wildlife, floor 1e-9
  bool with_theta = false;
  Vec theta_lower, theta_width;  // theta feature = (theta - lower) / width, 0.5 on zero width

  static FeatureSpec plain(const ParkInstance& park);
  static FeatureSpec theta_conditioned(const ParkInstance& park, const UncertaintySet& box);

  int dim() const { return (with_theta ? 3 : 2) * n_targets + 1; }
  Vec build(const EnvState& s, const Vec* theta) const;
  Vec theta_feature(const Vec& theta) const;
};

// Deterministic policy: actor MLP + budget-softmax projection.  Immutable;
// trainers build one from their working network when training finishes.
class NetPolicy : public Policy {
 public:
  NetPolicy(Mlp actor, FeatureSpec spec, Vec baked_theta = {});

  Vec act(const EnvState& state, EpisodeContext& ctx) const override;
  Vec act_with_theta(const EnvState& state, const Vec& theta) const;

  std::string kind() const override { return spec_.with_theta ? "net_theta" : "net"; }
  std::uint64_t param_hash() const override;

  bool differentiable() const override { return true; }
  Vec act_taped(const EnvState& state, const Vec& theta, PolicyTape& tape,
                EpisodeContext& ctx) const override;
  StateGrad backprop_state(const PolicyTape& tape, const Vec& d_action) const override;

  void save(TensorWriter& w) const override;
  static std::shared_ptr<NetPolicy> load(TensorReader& r);

  const Mlp& actor() const { return actor_; }
  const FeatureSpec& feature_spec() const { return spec_; }
  const Vec& baked_theta() const { return baked_theta_; }

 private:
  Mlp actor_;
  FeatureSpec spec_;
  Vec baked_theta_;  // required to act() when theta-conditioned
};

}  // namespace greensec
