#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "greensec/matrix_game.hpp"
#include "greensec/nature_oracle.hpp"

namespace greensec {

// Growing strategy sets with the cached return table r(pi, theta).  Each
// cell's Monte Carlo seed derives from the policy and theta content, so
// estimates are reproducible bit-exactly and independent of insertion or
// method order.
class StrategySets {
 public:
  StrategySets(const ParkInstance& park, std::uint64_t eval_root_seed, int eval_episodes);

  // Dedup by parameter hash / exact vector equality; returns the index.
  int add_policy(PolicyPtr p, std::string name);
  int add_theta(EnvParams t);

  int n_policies() const { return static_cast<int>(policies_.size()); }
  int n_thetas() const { return static_cast<int>(thetas_.size()); }
  const std::vector<PolicyPtr>& policies() const { return policies_; }
  const std::vector<std::string>& policy_names() const { return policy_names_; }
  const std::vector<EnvParams>& thetas() const { return thetas_; }

  // Fills any missing cells (parallelizable; per-cell seeds are content-keyed).
  void complete_table(int n_threads = 1);
  bool complete() const;
  const MeanStderr& cell(int row, int col) const;
  MeanStderr evaluate_cell(const Policy& policy, const EnvParams& theta) const;
  Mat return_means() const;   // throws on incomplete table
  Mat return_stderrs() const;

  std::uint64_t eval_root_seed() const { return eval_root_; }
  int eval_episodes() const { return eval_episodes_; }
  const ParkInstance& park() const { return park_; }

 private:
  const ParkInstance& park_;
  std::uint64_t eval_root_;
  int eval_episodes_;
  std::vector<PolicyPtr> policies_;
  std::vector<std::string> policy_names_;
  std::vector<std::uint64_t> policy_hashes_;
  std::vector<EnvParams> thetas_;
  std::vector<std::vector<std::optional<MeanStderr>>> cells_;  // [policy][theta]
  // content-keyed memo so repeated evaluations of the same pair are free
  mutable std::map<std::pair<std::uint64_t, std::uint64_t>, MeanStderr> memo_;
  mutable std::mutex memo_mu_;
};

// payoff(pi, theta) = r(pi, theta) - max_{pi'} r(pi', theta); column maxima
// are exactly zero and entries are <= 0.
PayoffMatrix build_regret_payoffs(const Mat& returns);

// Gaussian perturbation with per-coordinate sd = scale * box width, clipped
// to the box.
Vec perturb(const Vec& theta, const UncertaintySet& box, double scale, Rng& rng);

struct MirrorConfig {
  double epsilon = 0.5;       // convergence threshold, reward units
  int perturbations = 3;      // O
  double perturb_scale = 0.1;
  int epoch_cap = 10;
  int eval_episodes = 100;    // per return-table cell
  TrainConfig agent_train;
  NatureConfig nature;
  std::uint64_t seed = 0;
  int n_threads = 1;

  void validate() const;
};

struct EpochReport {
  int epoch = 0;
  double game_value = 0.0;     // restricted max-regret game value (agent payoff)
  double agent_delta = 0.0;    // best-response improvement over the equilibrium
  double nature_delta = 0.0;
  double nature_oracle_regret = 0.0;
  int n_policies = 0;
  int n_thetas = 0;
  double seconds = 0.0;
  MixedStrategy agent_mix;
  MixedStrategy nature_mix;
};

struct MirrorResult {
  std::shared_ptr<StrategySets> sets;
  MixedStrategy final_mixture;         // agent, over sets->policies()
  MixedStrategy final_nature_mixture;  // over sets->thetas()
  std::vector<EpochReport> reports;
  bool converged = false;
  int epochs = 0;
  int middle_index = 0, random_index = 1, zero_index = 2;  // baseline rows
};

// The double-oracle epoch loop: restricted Nash solve, agent and nature best
// responses, the epsilon-convergence test, parameter perturbation, and
// strategy-set growth, capped at epoch_cap.  If the cap is reached the
// returned mixture comes from one final solve over the complete sets.
MirrorResult run_mirror(const ParkInstance& park, const NatureDomain& domain,
                        const MirrorConfig& cfg);

}  // namespace greensec
