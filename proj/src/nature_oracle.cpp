#include "greensec/nature_oracle.hpp"

#include <algorithm>

namespace greensec {

WakeSleepMode wake_sleep_mode(int episode_1based, int kappa) {
  if (kappa < 1) throw ArgumentError("nature.kappa: must be >= 1");
  if (episode_1based % (2 * kappa) == 0) return WakeSleepMode::kBoth;
  if (episode_1based % kappa == 0) return WakeSleepMode::kThetaOnly;
  return WakeSleepMode::kPolicyOnly;
}

void NatureConfig::validate() const {
  train.validate();
  if (kappa < 1) throw ArgumentError("nature.kappa: must be >= 1");
  if (!(theta_lr > 0.0)) throw ArgumentError("nature.theta_lr: must be positive");
}

MeanStderr regret_estimate(const ParkInstance& park, const EnvParams& theta, const Policy& alt,
                           const std::vector<PolicyPtr>& agent_support,
                           const MixedStrategy& agent_mix, int n_episodes, std::uint64_t seed) {
  if (n_episodes < 1) throw ArgumentError("regret_estimate: n_episodes must be >= 1");
  if (agent_support.empty()) throw ArgumentError("regret_estimate: empty agent mixture");
  std::vector<double> diffs(static_cast<std::size_t>(n_episodes));
  for (int e = 0; e < n_episodes; ++e) {
    const std::uint64_t ep = mix_seed(seed, static_cast<std::uint64_t>(e));
    const std::uint64_t attack = mix_seed(ep, seed_tag::attack);
    const std::uint64_t pol = mix_seed(ep, seed_tag::policy);
    Rng mix_rng(mix_seed(ep, seed_tag::mixture));
    const Policy& pi = agent_support.size() == 1
                           ? *agent_support[0]
                           : *agent_support[static_cast<std::size_t>(agent_mix.sample(mix_rng))];
    // common random numbers: both rollouts share the attack stream
    diffs[static_cast<std::size_t>(e)] = rollout_return(park, theta, alt, attack, pol) -
                                         rollout_return(park, theta, pi, attack, pol);
  }
  return mean_stderr(diffs);
}

namespace {

Vec map_theta(const UncertaintySet& box, const Vec& z) {
  Vec theta(z.size());
  for (int i = 0; i < z.size(); ++i) {
    const double w = box.upper[i] - box.lower[i];
    theta[i] = w > 0.0 ? box.lower[i] + w * logistic(z[i]) : box.lower[i];
  }
  return theta;
}

}  // namespace

NatureTrainer::NatureTrainer(const ParkInstance& park, std::vector<PolicyPtr> agent_support,
                             MixedStrategy agent_mix, const UncertaintySet& box, NatureConfig cfg)
    : park_(park),
      support_(std::move(agent_support)),
      mix_(std::move(agent_mix)),
      box_(box),
      cfg_(cfg),
      core_([&] {
        cfg.validate();
        box.validate();
        if (box.size() != park.n_targets)
          throw ArgumentError("nature: box size must equal n_targets");
        Rng init(mix_seed(cfg.train.seed, seed_tag::train, 2));
        return DdpgCore(FeatureSpec::theta_conditioned(park, box), cfg.train, init);
      }()),
      rng_(mix_seed(cfg.train.seed, seed_tag::train, 3)) {
  if (support_.empty()) throw ArgumentError("nature: empty agent mixture");
  if (support_.size() != mix_.probs.size())
    throw ArgumentError("nature: agent support/mixture size mismatch");
  mix_.validate();

  // random interior start for theta
  z_ = Vec(park_.n_targets);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int i = 0; i < z_.size(); ++i) {
    const double p = u(rng_);
    z_[i] = std::log(p / (1.0 - p));
  }
  z_opt_ = Adam(static_cast<int>(z_.size()), cfg_.theta_lr);

  // warm-start the alternative policy from the heaviest plain net policy in
  // the mixture (zeroed theta-input block), so pi-hat can match pi from the
  // first episode and regret starts near zero
  int best = -1;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (support_[i]->kind() != "net") continue;
    if (best < 0 || mix_.probs[i] > mix_.probs[static_cast<std::size_t>(best)])
      best = static_cast<int>(i);
  }
  if (best >= 0) {
    const auto* src = dynamic_cast<const NetPolicy*>(support_[static_cast<std::size_t>(best)].get());
    if (src && src->feature_spec().n_targets == park_.n_targets &&
        src->actor().layers().size() == core_.actor().layers().size()) {
      const int n = park_.n_targets;
      // layer 0: copy all columns past the theta block, zero the theta block
      auto w_dst = core_.actor().weight(0);
      const auto w_src = src->actor().weight(0);
      if (w_dst.rows() == w_src.rows() && w_dst.cols() == w_src.cols() + n) {
        w_dst.leftCols(n).setZero();
        w_dst.rightCols(w_src.cols()) = w_src;
        core_.actor().bias(0) = src->actor().bias(0);
        for (std::size_t l = 1; l + 1 < core_.actor().layers().size(); ++l) {
          core_.actor().weight(static_cast<int>(l)) = src->actor().weight(static_cast<int>(l));
          core_.actor().bias(static_cast<int>(l)) = src->actor().bias(static_cast<int>(l));
        }
      }
    }
  }
  maybe_evaluate(true);
}

void NatureTrainer::set_opponent(std::vector<PolicyPtr> support, MixedStrategy mix) {
  if (support.empty()) throw ArgumentError("nature: empty agent mixture");
  if (support.size() != mix.probs.size())
    throw ArgumentError("nature: agent support/mixture size mismatch");
  mix.validate();
  support_ = std::move(support);
  mix_ = std::move(mix);
}

Vec NatureTrainer::theta() const { return map_theta(box_, z_); }

std::shared_ptr<NetPolicy> NatureTrainer::alt_snapshot() const { return core_.snapshot(); }

Vec NatureTrainer::theta_gradient(const Policy& opponent, std::uint64_t attack_seed,
                                  bool relaxed) const {
  const Vec th = theta();
  auto alt = core_.snapshot();
  const std::uint64_t pol_seed = mix_seed(attack_seed, seed_tag::policy);
  const ThetaGradResult g_alt =
      rollout_theta_grad(park_, th, *alt, attack_seed, pol_seed, relaxed);
  const ThetaGradResult g_agent =
      rollout_theta_grad(park_, th, opponent, attack_seed, pol_seed, relaxed);
  return g_alt.d_theta - g_agent.d_theta;
}

void NatureTrainer::run_episode() {
  if (diverged_) return;
  const int j = episode_ + 1;  // 1-based, matching the wake-sleep schedule
  WakeSleepMode mode = box_.is_point() ? WakeSleepMode::kPolicyOnly
                                       : wake_sleep_mode(j, cfg_.kappa);

  const Policy& pi = support_.size() == 1
                         ? *support_[0]
                         : *support_[static_cast<std::size_t>(mix_.sample(rng_))];
  const Vec th = theta();
  const EnvParams params{th};

  const double frac =
      cfg_.train.episodes > 1 ? static_cast<double>(episode_) / (cfg_.train.episodes - 1) : 0.0;
  const double noise = park_.budget * (cfg_.train.noise_start +
                                       (cfg_.train.noise_end - cfg_.train.noise_start) *
                                           std::min(frac, 1.0));

  // roll out pi-hat for replay transitions
  EnvState state = initial_state(park_);
  Vec feat = core_.spec().build(state, &th);
  for (int t = 0; t < park_.horizon; ++t) {
    const Vec action = core_.act_explore(state, &th, noise, rng_, park_);
    auto [next, reward] = env_step(park_, params, state, action, rng_);
    Vec next_feat = core_.spec().build(next, &th);
    core_.store({feat, action, reward, next_feat, next.timestep == park_.horizon});
    if (mode != WakeSleepMode::kThetaOnly && core_.can_update()) {
      for (int u = 0; u < cfg_.train.updates_per_step; ++u) core_.update(rng_);
    }
    state = std::move(next);
    feat = std::move(next_feat);
  }

  // ascend the regret surrogate in theta (straight-through rollout gradient,
  // common attack stream across the pi-hat and pi rollouts)
  if (mode != WakeSleepMode::kPolicyOnly) {
    const std::uint64_t attack_seed = rng_();
    const Vec g_theta = theta_gradient(pi, attack_seed, false);
    Vec g_z(z_.size());
    for (int i = 0; i < z_.size(); ++i) {
      const double w = box_.upper[i] - box_.lower[i];
      const double s = logistic(z_[i]);
      g_z[i] = g_theta[i] * w * s * (1.0 - s);
    }
    g_z = -g_z;  // Adam descends; we maximize regret
    z_opt_.step(z_, g_z);
  }

  ++episode_;
  if (!core_.params_finite() || !z_.allFinite()) {
    diverged_ = true;
    return;
  }
  maybe_evaluate();
}

void NatureTrainer::maybe_evaluate(bool force) {
  if (!force && episode_ % cfg_.train.eval_every != 0 && episode_ != cfg_.train.episodes) return;
  const Vec th = theta();
  auto alt = core_.snapshot(th);
  const auto est = regret_estimate(park_, EnvParams{th}, *alt, support_, mix_,
                                   cfg_.train.eval_episodes,
                                   mix_seed(cfg_.train.seed, seed_tag::eval, 1));
  if (!has_best_ || est.mean > best_regret_) {
    has_best_ = true;
    best_regret_ = est.mean;
    best_actor_params_ = core_.actor().params();
    best_z_ = z_;
  }
}

NatureResult NatureTrainer::finish() {
  NatureResult out;
  out.diverged = diverged_;
  out.episodes_run = episode_;
  if (!has_best_) maybe_evaluate(true);
  const Vec z_final = best_z_.size() > 0 ? best_z_ : z_;
  const Vec th = map_theta(box_, z_final);
  Mlp actor = core_.actor();
  if (best_actor_params_.size() > 0) actor.params() = best_actor_params_;
  out.theta = EnvParams{th};
  out.alt_policy = std::make_shared<NetPolicy>(std::move(actor), core_.spec(), th);
  out.regret = regret_estimate(park_, out.theta, *out.alt_policy, support_, mix_,
                               cfg_.train.eval_episodes,
                               mix_seed(cfg_.train.seed, seed_tag::eval, 1));
  return out;
}

NatureResult train_nature(const ParkInstance& park, std::vector<PolicyPtr> agent_support,
                          MixedStrategy agent_mix, const UncertaintySet& box,
                          const NatureConfig& cfg) {
  NatureTrainer trainer(park, std::move(agent_support), std::move(agent_mix), box, cfg);
  for (int e = 0; e < cfg.train.episodes && !trainer.diverged(); ++e) trainer.run_episode();
  return trainer.finish();
}

}  // namespace greensec
