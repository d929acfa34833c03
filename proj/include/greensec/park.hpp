#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "greensec/common.hpp"

namespace greensec {

class Policy;

// Static description of the protected area: an R x C grid of 1x1 km targets,
// the patrol budget, horizon, and the attack/wildlife dynamics constants.
struct ParkInstance {
  int n_targets = 0;    // N = rows * cols
  int rows = 0, cols = 0;
  int horizon = 0;      // T
  double budget = 0.0;  // B, total effort per timestep, sum_i a_i <= B
  double alpha = 1.0;   // poaching kill strength, > 0
  double psi = 1.05;    // wildlife growth exponent, > 1
  double beta = -5.0;   // deterrence coefficient on own past effort, < 0
  double eta = 0.696;   // displacement coefficient on neighbors' past effort, > 0
  int neighbor_window = 3;  // odd w means a w x w window centered on the cell
  Vec initial_wildlife;     // w^(0), componentwise >= 0

  // Square grid when n is a perfect square, otherwise a 1 x n strip.
  static ParkInstance make(int n, int horizon, double budget);

  void validate() const;  // throws ArgumentError naming the offending field

  // Indices inside the window centered on i, excluding i, clipped at the
  // grid boundary.  Cached after the first call.
  const std::vector<int>& neighbors(int i) const;

 private:
  mutable std::vector<std::vector<int>> neighbor_cache_;
};

// The uncertain per-target attractiveness vector theta.
struct EnvParams {
  Vec attractiveness;

  EnvParams() = default;
  explicit EnvParams(Vec v) : attractiveness(std::move(v)) {}
  std::uint64_t hash() const { return hash_vec(attractiveness); }
  bool operator==(const EnvParams& o) const { return attractiveness == o.attractiveness; }
};

// Compact box Z: theta_i in [lower_i, upper_i].
struct UncertaintySet {
  Vec lower, upper;

  UncertaintySet() = default;
  UncertaintySet(Vec lo, Vec hi);

  void validate() const;
  int size() const { return static_cast<int>(lower.size()); }
  bool is_point() const { return (upper - lower).lpNorm<Eigen::Infinity>() == 0.0; }
  Vec width() const { return upper - lower; }
  Vec midpoint() const { return 0.5 * (lower + upper); }
  Vec clip(Vec theta) const;
  Vec sample(Rng& rng) const;  // uniform per coordinate
  bool contains(const Vec& theta, double tol = 1e-12) const;
};

// Nature's parameter domain: either the full box or an explicit finite set of
// points inside it (used for discrete-uncertainty experiments).
struct NatureDomain {
  UncertaintySet box;
  std::vector<EnvParams> points;  // nonempty => finite domain

  bool finite() const { return !points.empty(); }
  static NatureDomain from_box(UncertaintySet b) { return {std::move(b), {}}; }
  static NatureDomain from_points(std::vector<EnvParams> pts);
};

// State s = (a^(t-1), w^(t-1), t).
struct EnvState {
  Vec past_effort;
  Vec wildlife;
  int timestep = 0;
};

EnvState initial_state(const ParkInstance& park);

// Effort vector feasibility: components in [0,1] and sum <= B (+tol).
bool effort_feasible(const ParkInstance& park, const Vec& effort, double tol = 1e-9);

// Clips to [0,1] and rescales downward if the budget is exceeded.
Vec project_effort(const ParkInstance& park, Vec effort);

// logistic(theta_i + beta * a_i^(t-1) + eta * sum_{j in nbr(i)} a_j^(t-1))
double attack_probability(const ParkInstance& park, const EnvParams& params,
                          const EnvState& state, int i);

// max{0, w^psi - alpha * attack * (1 - current_effort)}
double wildlife_step(const ParkInstance& park, double wildlife, int attack, double current_effort);

// One transition.  Samples one Bernoulli attack per target, applies the
// wildlife response, and pays the terminal reward sum_i w_i^(T) at t = T.
std::pair<EnvState, double> env_step(const ParkInstance& park, const EnvParams& params,
                                     const EnvState& state, const Vec& action, Rng& attack_rng);

// --- mixtures ---

struct MixedStrategy {
  std::vector<double> probs;

  void validate() const;  // sums to 1 +- 1e-9, nonnegative
  int size() const { return static_cast<int>(probs.size()); }
  int sample(Rng& rng) const;
  static MixedStrategy point(int n, int index);
  static MixedStrategy uniform(int n);
};

struct ParamsMixture {
  std::vector<EnvParams> support;
  MixedStrategy weights;

  static ParamsMixture point(EnvParams p);
  void validate() const;
  const EnvParams& sample(Rng& rng) const { return support[static_cast<std::size_t>(weights.sample(rng))]; }
};

struct PolicyMixture {
  std::vector<const Policy*> support;
  MixedStrategy weights;

  static PolicyMixture point(const Policy* p);
  void validate() const;
  const Policy& sample(Rng& rng) const { return *support[static_cast<std::size_t>(weights.sample(rng))]; }
};

// --- rollouts ---

// Full episode from s^(0).  The attack stream consumes exactly N uniforms per
// step in target order, so two rollouts with the same attack_seed see the
// same attack luck regardless of the policy (common random numbers).
double rollout_return(const ParkInstance& park, const EnvParams& params, const Policy& policy,
                      std::uint64_t attack_seed, std::uint64_t policy_seed);

// Monte Carlo estimate of r(pi, theta).  Episode e uses seeds derived from
// (seed, e), so estimates are reproducible and shardable across threads.
MeanStderr estimate_return(const ParkInstance& park, const ParamsMixture& params,
                           const PolicyMixture& policy, int n_episodes, std::uint64_t seed,
                           int n_threads = 1);

// --- wildlife initializers (experiment presets) ---

Vec wildlife_random(const ParkInstance& park, Rng& rng);            // iid U[0, 3]
Vec wildlife_peaked(const ParkInstance& park);   // tight Gaussian kernel, peak 5
Vec wildlife_flatter(const ParkInstance& park);  // wide Gaussian kernel, peak 3

// Experiment-style box construction: centers c_i ~ U[center_lo, center_hi],
// interval [c_i - s/2, c_i + s/2].
UncertaintySet make_experiment_box(int n, double interval, Rng& rng, double center_lo = -10.0,
                                   double center_hi = 0.0);

}  // namespace greensec
