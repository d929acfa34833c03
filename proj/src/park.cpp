#include "greensec/park.hpp"

#include <algorithm>
#include <cmath>

#include "greensec/policy.hpp"

namespace greensec {

namespace {

int isqrt_exact(int n) {
  int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  return r * r == n ? r : -1;
}

}  // namespace

ParkInstance ParkInstance::make(int n, int horizon, double budget) {
  ParkInstance p;
  p.n_targets = n;
  int side = isqrt_exact(n);
  if (side > 0) {
    p.rows = p.cols = side;
  } else {
    p.rows = 1;
    p.cols = n;
  }
  p.horizon = horizon;
  p.budget = budget;
  p.initial_wildlife = Vec::Ones(n);
  return p;
}

void ParkInstance::validate() const {
  if (n_targets <= 0) throw ArgumentError("park.n_targets: must be positive");
  if (rows <= 0 || cols <= 0 || rows * cols != n_targets)
    throw ArgumentError("park.rows/cols: grid dimensions must multiply to n_targets");
  if (horizon <= 0) throw ArgumentError("park.horizon: must be positive");
  if (budget < 0.0 || budget > n_targets)
    throw ArgumentError("park.budget: must satisfy 0 <= budget <= n_targets");
  if (!(alpha > 0.0)) throw ArgumentError("park.alpha: must be > 0");
  if (!(psi > 1.0)) throw ArgumentError("park.psi: must be > 1");
  if (!(beta < 0.0)) throw ArgumentError("park.beta: must be < 0");
  if (!(eta > 0.0)) throw ArgumentError("park.eta: must be > 0");
  if (neighbor_window < 1 || neighbor_window % 2 == 0)
    throw ArgumentError("park.neighbor_window: must be a positive odd integer");
  if (initial_wildlife.size() != n_targets)
    throw ArgumentError("park.initial_wildlife: must have n_targets entries");
  if ((initial_wildlife.array() < 0.0).any())
    throw ArgumentError("park.initial_wildlife: entries must be >= 0");
}

const std::vector<int>& ParkInstance::neighbors(int i) const {
  if (i < 0 || i >= n_targets)
    throw ArgumentError("neighbors: target index " + std::to_string(i) + " out of range [0, " +
                        std::to_string(n_targets) + ")");
  if (neighbor_cache_.empty()) {
    neighbor_cache_.resize(static_cast<std::size_t>(n_targets));
    const int half = (neighbor_window - 1) / 2;
    for (int c = 0; c < n_targets; ++c) {
      const int r0 = c / cols, c0 = c % cols;
      auto& out = neighbor_cache_[static_cast<std::size_t>(c)];
      for (int dr = -half; dr <= half; ++dr) {
        for (int dc = -half; dc <= half; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int r = r0 + dr, cc = c0 + dc;
          if (r < 0 || r >= rows || cc < 0 || cc >= cols) continue;
          out.push_back(r * cols + cc);
        }
      }
      std::sort(out.begin(), out.end());
    }
  }
  return neighbor_cache_[static_cast<std::size_t>(i)];
}

UncertaintySet::UncertaintySet(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
  validate();
}

void UncertaintySet::validate() const {
  if (lower.size() != upper.size())
    throw ArgumentError("uncertainty: lower and upper must have equal length");
  if (lower.size() == 0) throw ArgumentError("uncertainty: empty box");
  for (int i = 0; i < lower.size(); ++i)
    if (!(lower[i] <= upper[i]))
      throw ArgumentError("uncertainty: lower[" + std::to_string(i) + "] > upper[" +
                          std::to_string(i) + "]");
}

Vec UncertaintySet::clip(Vec theta) const {
  for (int i = 0; i < theta.size(); ++i) theta[i] = std::clamp(theta[i], lower[i], upper[i]);
  return theta;
}

Vec UncertaintySet::sample(Rng& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec out(lower.size());
  for (int i = 0; i < lower.size(); ++i) out[i] = lower[i] + (upper[i] - lower[i]) * u(rng);
  return out;
}

bool UncertaintySet::contains(const Vec& theta, double tol) const {
  if (theta.size() != lower.size()) return false;
  for (int i = 0; i < theta.size(); ++i)
    if (theta[i] < lower[i] - tol || theta[i] > upper[i] + tol) return false;
  return true;
}

NatureDomain NatureDomain::from_points(std::vector<EnvParams> pts) {
  if (pts.empty()) throw ArgumentError("uncertainty.points: need at least one point");
  const int n = static_cast<int>(pts.front().attractiveness.size());
  Vec lo = pts.front().attractiveness, hi = pts.front().attractiveness;
  for (const auto& p : pts) {
    if (p.attractiveness.size() != n)
      throw ArgumentError("uncertainty.points: points must have equal length");
    lo = lo.cwiseMin(p.attractiveness);
    hi = hi.cwiseMax(p.attractiveness);
  }
  NatureDomain d;
  d.box = UncertaintySet(std::move(lo), std::move(hi));
  d.points = std::move(pts);
  return d;
}

EnvState initial_state(const ParkInstance& park) {
  return EnvState{Vec::Zero(park.n_targets), park.initial_wildlife, 0};
}

bool effort_feasible(const ParkInstance& park, const Vec& effort, double tol) {
  if (effort.size() != park.n_targets) return false;
  for (int i = 0; i < effort.size(); ++i)
    if (!(effort[i] >= -tol && effort[i] <= 1.0 + tol)) return false;
  return effort.sum() <= park.budget + tol;
}

Vec project_effort(const ParkInstance& park, Vec effort) {
  for (int i = 0; i < effort.size(); ++i) effort[i] = std::clamp(effort[i], 0.0, 1.0);
  const double s = effort.sum();
  if (s > park.budget && s > 0.0) effort *= park.budget / s;
  return effort;
}

double attack_probability(const ParkInstance& park, const EnvParams& params,
                          const EnvState& state, int i) {
  if (i < 0 || i >= park.n_targets)
    throw ArgumentError("attack_probability: target index out of range");
  double z = params.attractiveness[i] + park.beta * state.past_effort[i];
  double nb = 0.0;
  for (int j : park.neighbors(i)) nb += state.past_effort[j];
  z += park.eta * nb;
  return logistic(z);
}

double wildlife_step(const ParkInstance& park, double wildlife, int attack, double current_effort) {
  const double grown = std::pow(wildlife, park.psi);
  return std::max(0.0, grown - park.alpha * attack * (1.0 - current_effort));
}

std::pair<EnvState, double> env_step(const ParkInstance& park, const EnvParams& params,
                                     const EnvState& state, const Vec& action, Rng& attack_rng) {
  if (state.timestep >= park.horizon)
    throw UsageError("env_step: state is terminal (t = horizon)");
  if (action.size() != park.n_targets)
    throw ArgumentError("env_step: action has wrong length");

  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = park.n_targets;
  EnvState next;
  next.past_effort = action;
  next.wildlife = Vec(n);
  next.timestep = state.timestep + 1;
  for (int i = 0; i < n; ++i) {
    const double p = attack_probability(park, params, state, i);
    const int attack = u(attack_rng) < p ? 1 : 0;
    next.wildlife[i] = wildlife_step(park, state.wildlife[i], attack, action[i]);
  }
  const double reward = next.timestep == park.horizon ? next.wildlife.sum() : 0.0;
  return {std::move(next), reward};
}

// --- mixtures ---

void MixedStrategy::validate() const {
  if (probs.empty()) throw ArgumentError("mixed strategy: empty support");
  double s = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw ArgumentError("mixed strategy: negative probability");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-9)
    throw ArgumentError("mixed strategy: probabilities sum to " + format_double(s));
}

int MixedStrategy::sample(Rng& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (r < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

MixedStrategy MixedStrategy::point(int n, int index) {
  MixedStrategy m;
  m.probs.assign(static_cast<std::size_t>(n), 0.0);
  m.probs[static_cast<std::size_t>(index)] = 1.0;
  return m;
}

MixedStrategy MixedStrategy::uniform(int n) {
  MixedStrategy m;
  m.probs.assign(static_cast<std::size_t>(n), 1.0 / n);
  return m;
}

ParamsMixture ParamsMixture::point(EnvParams p) {
  ParamsMixture m;
  m.support.push_back(std::move(p));
  m.weights = MixedStrategy::point(1, 0);
  return m;
}

void ParamsMixture::validate() const {
  if (support.empty()) throw ArgumentError("params mixture: empty support");
  if (support.size() != weights.probs.size())
    throw ArgumentError("params mixture: support/weights size mismatch");
  weights.validate();
}

PolicyMixture PolicyMixture::point(const Policy* p) {
  PolicyMixture m;
  m.support.push_back(p);
  m.weights = MixedStrategy::point(1, 0);
  return m;
}

void PolicyMixture::validate() const {
  if (support.empty()) throw ArgumentError("policy mixture: empty support");
  if (support.size() != weights.probs.size())
    throw ArgumentError("policy mixture: support/weights size mismatch");
  weights.validate();
}

// --- rollouts ---

double rollout_return(const ParkInstance& park, const EnvParams& params, const Policy& policy,
                      std::uint64_t attack_seed, std::uint64_t policy_seed) {
  Rng attack_rng(attack_seed);
  EpisodeContext ctx(policy_seed);
  EnvState state = initial_state(park);
  double total = 0.0;
  for (int t = 0; t < park.horizon; ++t) {
    const Vec action = policy.act(state, ctx);
    auto [next, reward] = env_step(park, params, state, action, attack_rng);
    total += reward;
    state = std::move(next);
  }
  return total;
}

MeanStderr estimate_return(const ParkInstance& park, const ParamsMixture& params,
                           const PolicyMixture& policy, int n_episodes, std::uint64_t seed,
                           int n_threads) {
  if (n_episodes < 1) throw ArgumentError("estimate_return: n_episodes must be >= 1");
  params.validate();
  policy.validate();
  std::vector<double> returns(static_cast<std::size_t>(n_episodes));
  parallel_for(n_episodes, n_threads, [&](int e) {
    const std::uint64_t ep = mix_seed(seed, static_cast<std::uint64_t>(e));
    Rng mix_rng(mix_seed(ep, seed_tag::mixture));
    const EnvParams& th = params.support.size() == 1 ? params.support[0] : params.sample(mix_rng);
    const Policy& pi = policy.support.size() == 1 ? *policy.support[0] : policy.sample(mix_rng);
    returns[static_cast<std::size_t>(e)] =
        rollout_return(park, th, pi, mix_seed(ep, seed_tag::attack), mix_seed(ep, seed_tag::policy));
  });
  return mean_stderr(returns);
}

// --- wildlife initializers ---

Vec wildlife_random(const ParkInstance& park, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 3.0);
  Vec w(park.n_targets);
  for (int i = 0; i < w.size(); ++i) w[i] = u(rng);
  return w;
}

namespace {

Vec wildlife_kernel(const ParkInstance& park, double rel_width, double peak) {
  const double cr = (park.rows - 1) / 2.0, cc = (park.cols - 1) / 2.0;
  const double side = std::max(park.rows, park.cols);
  const double sigma = std::max(rel_width * side, 1e-6);
  Vec w(park.n_targets);
  for (int i = 0; i < park.n_targets; ++i) {
    const double dr = i / park.cols - cr, dc = i % park.cols - cc;
    w[i] = peak * std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
  }
  return w;
}

}  // namespace

Vec wildlife_peaked(const ParkInstance& park) { return wildlife_kernel(park, 0.10, 5.0); }
Vec wildlife_flatter(const ParkInstance& park) { return wildlife_kernel(park, 0.40, 3.0); }

UncertaintySet make_experiment_box(int n, double interval, Rng& rng, double center_lo,
                                   double center_hi) {
  if (interval < 0.0) throw ArgumentError("uncertainty.interval: must be >= 0");
  std::uniform_real_distribution<double> u(center_lo, center_hi);
  Vec lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    const double c = u(rng);
    lo[i] = c - interval / 2.0;
    hi[i] = c + interval / 2.0;
  }
  return UncertaintySet(std::move(lo), std::move(hi));
}

}  // namespace greensec
