#pragma once

#include "greensec/mirror.hpp"

namespace greensec {

// Defender trained as if theta sits at the middle of every uncertainty
// interval.
TrainResult middle_baseline(const ParkInstance& park, const NatureDomain& domain,
                            const TrainConfig& cfg);

// State-independent random baseline.
PolicyPtr random_baseline(const ParkInstance& park);

struct RarlConfig {
  TrainConfig train;
  int kappa = 10;        // episodes per protagonist/adversary block
  double theta_lr = 0.05;

  void validate() const;
};

struct RarlResult {
  TrainResult protagonist;
  EnvParams adversary_theta;  // the adversary's final parameter point
};

// Alternating adversarial training with a reward-minimizing adversary over
// theta (maximin objective).  Returns the protagonist.
RarlResult rarl_maximin(const ParkInstance& park, const UncertaintySet& box,
                        const RarlConfig& cfg);

// Same alternation with a regret-maximizing adversary: the adversary runs
// the full nature-oracle update (theta and an alternative policy) against
// the current protagonist.  Returns the protagonist.
RarlResult rarl_regret(const ParkInstance& park, const UncertaintySet& box,
                       const RarlConfig& cfg);

// --- max-regret evaluation harness ---

struct MethodSpec {
  std::string name;
  MixedStrategy mixture;  // over the augmented sets' policy list
};

MethodSpec pure_method(const std::string& name, int policy_index, int n_policies);

struct EvalResult {
  std::string method;
  double max_regret = 0.0;
  double stderr_ = 0.0;  // propagated Monte Carlo error at the attaining column
  double audit_max_regret = 0.0;  // over the held-out audit thetas, if any
};

// Max regret over the final theta columns, with r(pi*, theta) approximated by
// the column max over the augmented policy set.  All methods read the same
// (pi, theta)-seeded return table, so evaluation is method-order invariant.
// audit_thetas, when nonempty, score each method on held-out parameter points
// (columns outside the sets) as an overfitting guard.
std::vector<EvalResult> evaluate_max_regret(StrategySets& sets,
                                            const std::vector<MethodSpec>& methods,
                                            const std::vector<EnvParams>& audit_thetas = {},
                                            int n_threads = 1);

// --- experiment grid ---

struct ExperimentConfig {
  std::string name = "default";
  int n_targets = 25;
  int horizon = 5;
  double budget = 5.0;
  double interval = 3.0;          // uncertainty interval size
  double deterrence = 5.0;        // |beta|; the model uses beta = -deterrence
  std::string wildlife_init = "random";  // random | peaked | flatter
  double eta = 0.696;
  double alpha = 1.0;
  double psi = 1.05;
  int trials = 5;
  std::vector<std::string> methods = {"mirror", "middle", "random"};
  int audit_points = 20;
  int baseline_variants = 0;  // perturbation-trained variants per baseline family
  MirrorConfig mirror;
  RarlConfig rarl;
  std::uint64_t seed = 0;

  void validate() const;
};

ParkInstance build_park(const ExperimentConfig& cfg, std::uint64_t trial_seed);
NatureDomain build_domain(const ExperimentConfig& cfg, const ParkInstance& park,
                          std::uint64_t trial_seed);

struct TrialRow {
  std::string setting;
  std::string method;
  int trial = 0;
  double max_regret = 0.0;
  double stderr_ = 0.0;
  double audit_max_regret = 0.0;
  double runtime_s = 0.0;
};

// One experiment cell: runs MIRROR, trains the requested baselines, builds
// the shared augmented return table, and scores every method on it.
std::vector<TrialRow> run_trial(const ExperimentConfig& cfg, int trial);

}  // namespace greensec
