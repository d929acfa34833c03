#pragma once

#include <memory>

#include "greensec/agent_oracle.hpp"
#include "greensec/diff_rollout.hpp"

namespace greensec {

// Wake-sleep alternation: every 2*kappa-th episode updates both the
// alternative policy and theta, every other kappa-th episode updates theta
// only, and all remaining episodes update the policy only.
enum class WakeSleepMode { kPolicyOnly, kThetaOnly, kBoth };
WakeSleepMode wake_sleep_mode(int episode_1based, int kappa);

struct NatureConfig {
  TrainConfig train;      // settings for the alternative policy's learner
  int kappa = 10;         // wake-sleep switch frequency
  double theta_lr = 0.05; // Adam rate on the sigmoid-space theta parameters

  void validate() const;
};

struct NatureResult {
  EnvParams theta;
  std::shared_ptr<NetPolicy> alt_policy;  // theta-conditioned, final theta baked
  MeanStderr regret;                      // estimated vs the agent mixture
  bool diverged = false;
  int episodes_run = 0;
};

// Monte Carlo estimate of r(alt, theta) - E_{pi ~ mixture} r(pi, theta) with
// common random numbers: both rollouts of an episode share the attack stream.
MeanStderr regret_estimate(const ParkInstance& park, const EnvParams& theta, const Policy& alt,
                           const std::vector<PolicyPtr>& agent_support,
                           const MixedStrategy& agent_mix, int n_episodes, std::uint64_t seed);

// Joint learner for worst-case parameters and the theta-conditioned
// alternative policy (the regret-maximizing best response to an agent
// mixture).  Theta lives in sigmoid space over the box, so it satisfies the
// box constraint after every update; its gradient comes from straight-through
// rollout differentiation of the regret.
class NatureTrainer {
 public:
  NatureTrainer(const ParkInstance& park, std::vector<PolicyPtr> agent_support,
                MixedStrategy agent_mix, const UncertaintySet& box, NatureConfig cfg);

  void run_episode();
  int episodes_run() const { return episode_; }
  bool diverged() const { return diverged_; }
  void set_opponent(std::vector<PolicyPtr> support, MixedStrategy mix);

  Vec theta() const;  // current mapped value, always inside the box
  std::shared_ptr<NetPolicy> alt_snapshot() const;  // current params, no baked theta
  DdpgCore& core() { return core_; }
  const Vec& z() const { return z_; }

  // d regret / d theta estimate at the current point against a sampled
  // opponent; exposed for the gradient sign checks.
  Vec theta_gradient(const Policy& opponent, std::uint64_t attack_seed, bool relaxed) const;

  NatureResult finish();

 private:
  void maybe_evaluate(bool force = false);

  const ParkInstance& park_;
  std::vector<PolicyPtr> support_;
  MixedStrategy mix_;
  UncertaintySet box_;
  NatureConfig cfg_;
  DdpgCore core_;
  Vec z_;
  Adam z_opt_;
  Rng rng_;
  int episode_ = 0;
  bool diverged_ = false;
  bool has_best_ = false;
  double best_regret_ = 0.0;
  Vec best_actor_params_, best_z_;
};

// Algorithm entry point: train to completion against the agent mixture.
NatureResult train_nature(const ParkInstance& park, std::vector<PolicyPtr> agent_support,
                          MixedStrategy agent_mix, const UncertaintySet& box,
                          const NatureConfig& cfg);

}  // namespace greensec
