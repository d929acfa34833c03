#include "greensec/agent_oracle.hpp"

#include <algorithm>

namespace greensec {

void TrainConfig::validate() const {
  if (episodes <= 0) throw ArgumentError("train.episodes: must be positive");
  if (buffer_capacity <= 0) throw ArgumentError("train.buffer_capacity: must be positive");
  if (batch_size <= 0) throw ArgumentError("train.batch_size: must be positive");
  if (warmup_transitions < batch_size)
    throw ArgumentError("train.warmup_transitions: must be >= batch_size");
  if (updates_per_step < 0) throw ArgumentError("train.updates_per_step: must be >= 0");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0))
    throw ArgumentError("train.actor_lr/critic_lr: must be positive");
  if (!(polyak > 0.0 && polyak <= 1.0)) throw ArgumentError("train.polyak: must be in (0, 1]");
  if (noise_start < 0.0 || noise_end < 0.0)
    throw ArgumentError("train.noise_start/noise_end: must be >= 0");
  if (discount != 1.0) throw ArgumentError("train.discount: fixed at 1.0 for terminal rewards");
  if (hidden.empty()) throw ArgumentError("train.hidden: need at least one hidden layer");
  if (eval_every <= 0 || eval_episodes <= 0)
    throw ArgumentError("train.eval_every/eval_episodes: must be positive");
}

namespace {

std::vector<int> actor_layers(const FeatureSpec& spec, const TrainConfig& cfg) {
  std::vector<int> l{spec.dim()};
  l.insert(l.end(), cfg.hidden.begin(), cfg.hidden.end());
  l.push_back(spec.n_targets);
  return l;
}

std::vector<int> critic_layers(const FeatureSpec& spec, const TrainConfig& cfg) {
  std::vector<int> l{spec.dim() + spec.n_targets};
  l.insert(l.end(), cfg.hidden.begin(), cfg.hidden.end());
  l.push_back(1);
  return l;
}

}  // namespace

DdpgCore::DdpgCore(FeatureSpec spec, const TrainConfig& cfg, Rng& init_rng)
    : spec_(std::move(spec)), cfg_(cfg) {
  actor_ = Mlp(actor_layers(spec_, cfg_), init_rng);
  critic_ = Mlp(critic_layers(spec_, cfg_), init_rng);
  actor_target_ = actor_;
  critic_target_ = critic_;
  actor_opt_ = Adam(actor_.n_params(), cfg_.actor_lr);
  critic_opt_ = Adam(critic_.n_params(), cfg_.critic_lr);
}

Vec DdpgCore::act_greedy(const EnvState& s, const Vec* theta) const {
  const Vec x = spec_.build(s, theta);
  return budget_softmax(actor_.forward(x), spec_.budget).col(0);
}

Vec DdpgCore::act_explore(const EnvState& s, const Vec* theta, double noise_scale, Rng& noise_rng,
                          const ParkInstance& park) const {
  Vec a = act_greedy(s, theta);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < a.size(); ++i) a[i] += noise_scale * gauss(noise_rng);
  return project_effort(park, std::move(a));
}

void DdpgCore::store(Transition tr) {
  buffer_.push_back(std::move(tr));
  if (static_cast<int>(buffer_.size()) > cfg_.buffer_capacity) buffer_.pop_front();
}

bool DdpgCore::can_update() const {
  return static_cast<int>(buffer_.size()) >= cfg_.warmup_transitions;
}

void DdpgCore::update(Rng& sample_rng) {
  const int b = cfg_.batch_size;
  std::uniform_int_distribution<std::size_t> pick(0, buffer_.size() - 1);
  std::vector<Transition> batch;
  batch.reserve(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i) batch.push_back(buffer_[pick(sample_rng)]);

  // critic step
  {
    Vec grad = Vec::Zero(critic_.n_params());
    critic_loss_and_grad(batch, &grad);
    critic_opt_.step(critic_.params(), grad);
  }
  // actor step
  {
    Vec grad = Vec::Zero(actor_.n_params());
    actor_loss_and_grad(batch, &grad);
    actor_opt_.step(actor_.params(), grad);
  }
  // target mixing
  actor_target_.params() =
      (1.0 - cfg_.polyak) * actor_target_.params() + cfg_.polyak * actor_.params();
  critic_target_.params() =
      (1.0 - cfg_.polyak) * critic_target_.params() + cfg_.polyak * critic_.params();
}

double DdpgCore::critic_loss_and_grad(const std::vector<Transition>& batch, Vec* grad) const {
  const int b = static_cast<int>(batch.size());
  const int fd = spec_.dim(), n = spec_.n_targets;

  // targets from the frozen networks
  Mat xs_next(fd, b);
  for (int i = 0; i < b; ++i) xs_next.col(i) = batch[static_cast<std::size_t>(i)].next_features;
  const Mat a_next = budget_softmax(actor_target_.forward(xs_next), spec_.budget);
  Mat q_in_next(fd + n, b);
  q_in_next.topRows(fd) = xs_next;
  q_in_next.bottomRows(n) = a_next;
  const Mat q_next = critic_target_.forward(q_in_next);

  Mat q_in(fd + n, b);
  for (int i = 0; i < b; ++i) {
    q_in.col(i).head(fd) = batch[static_cast<std::size_t>(i)].features;
    q_in.col(i).tail(n) = batch[static_cast<std::size_t>(i)].action;
  }
  std::vector<Mat> tape;
  const Mat q = critic_.forward(q_in, &tape);

  double loss = 0.0;
  Mat g_out(1, b);
  for (int i = 0; i < b; ++i) {
    const auto& tr = batch[static_cast<std::size_t>(i)];
    const double y = tr.reward + (tr.terminal ? 0.0 : cfg_.discount * q_next(0, i));
    const double diff = q(0, i) - y;
    loss += diff * diff;
    g_out(0, i) = 2.0 * diff / b;
  }
  loss /= b;
  if (grad) critic_.backward(tape, g_out, grad, false);
  return loss;
}

double DdpgCore::actor_loss_and_grad(const std::vector<Transition>& batch, Vec* grad) const {
  const int b = static_cast<int>(batch.size());
  const int fd = spec_.dim(), n = spec_.n_targets;

  Mat xs(fd, b);
  for (int i = 0; i < b; ++i) xs.col(i) = batch[static_cast<std::size_t>(i)].features;
  std::vector<Mat> actor_tape;
  const Mat logits = actor_.forward(xs, &actor_tape);
  Mat softmax;
  const Mat a = budget_softmax(logits, spec_.budget, &softmax);

  Mat q_in(fd + n, b);
  q_in.topRows(fd) = xs;
  q_in.bottomRows(n) = a;
  std::vector<Mat> critic_tape;
  const Mat q = critic_.forward(q_in, &critic_tape);
  const double loss = -q.row(0).mean();

  if (grad) {
    Mat g_q = Mat::Constant(1, b, -1.0 / b);
    const Mat g_in = critic_.backward(critic_tape, g_q, nullptr, true);
    const Mat g_a = g_in.bottomRows(n);
    const Mat g_logits = budget_softmax_backward(g_a, softmax, spec_.budget);
    actor_.backward(actor_tape, g_logits, grad, false);
  }
  return loss;
}

bool DdpgCore::params_finite() const {
  return actor_.params().allFinite() && critic_.params().allFinite() &&
         actor_target_.params().allFinite() && critic_target_.params().allFinite();
}

std::shared_ptr<NetPolicy> DdpgCore::snapshot(Vec baked_theta) const {
  return std::make_shared<NetPolicy>(actor_, spec_, std::move(baked_theta));
}

// --- AgentTrainer ---

AgentTrainer::AgentTrainer(const ParkInstance& park, ParamsMixture mixture, TrainConfig cfg)
    : park_(park),
      mixture_(std::move(mixture)),
      cfg_(cfg),
      core_([&] {
        cfg.validate();
        park.validate();
        Rng init(mix_seed(cfg.seed, seed_tag::train));
        return DdpgCore(FeatureSpec::plain(park), cfg, init);
      }()),
      rng_(mix_seed(cfg.seed, seed_tag::train, 1)) {
  mixture_.validate();
}

void AgentTrainer::set_mixture(ParamsMixture m) {
  m.validate();
  mixture_ = std::move(m);
}

void AgentTrainer::run_episode() {
  if (diverged_) return;
  const double frac = cfg_.episodes > 1 ? static_cast<double>(episode_) / (cfg_.episodes - 1) : 0.0;
  const double noise =
      park_.budget * (cfg_.noise_start + (cfg_.noise_end - cfg_.noise_start) * std::min(frac, 1.0));

  const EnvParams& theta =
      mixture_.support.size() == 1 ? mixture_.support[0] : mixture_.sample(rng_);
  EnvState state = initial_state(park_);
  Vec feat = core_.spec().build(state, nullptr);
  for (int t = 0; t < park_.horizon; ++t) {
    const Vec action = core_.act_explore(state, nullptr, noise, rng_, park_);
    auto [next, reward] = env_step(park_, theta, state, action, rng_);
    Vec next_feat = core_.spec().build(next, nullptr);
    core_.store({feat, action, reward, next_feat, next.timestep == park_.horizon});
    if (core_.can_update())
      for (int u = 0; u < cfg_.updates_per_step; ++u) core_.update(rng_);
    state = std::move(next);
    feat = std::move(next_feat);
  }
  ++episode_;
  if (!core_.params_finite()) {
    diverged_ = true;
    return;
  }
  maybe_evaluate();
}

void AgentTrainer::maybe_evaluate() {
  if (episode_ % cfg_.eval_every != 0 && episode_ != cfg_.episodes) return;
  auto policy = core_.snapshot();
  const auto est = estimate_return(park_, mixture_, PolicyMixture::point(policy.get()),
                                   cfg_.eval_episodes, mix_seed(cfg_.seed, seed_tag::eval));
  if (!has_best_ || est.mean > best_eval_) {
    has_best_ = true;
    best_eval_ = est.mean;
    best_actor_params_ = core_.actor().params();
  }
}

TrainResult AgentTrainer::finish() {
  TrainResult out;
  out.diverged = diverged_;
  out.episodes_run = episode_;
  if (!has_best_) maybe_evaluate();
  if (has_best_ && best_actor_params_.size() > 0) {
    Mlp actor = core_.actor();
    actor.params() = best_actor_params_;
    out.policy = std::make_shared<NetPolicy>(std::move(actor), core_.spec());
    out.eval_return = best_eval_;
  } else {
    out.policy = core_.snapshot();
  }
  return out;
}

TrainResult train_agent(const ParkInstance& park, const ParamsMixture& nature_mixture,
                        const TrainConfig& cfg) {
  AgentTrainer trainer(park, nature_mixture, cfg);
  for (int e = 0; e < cfg.episodes && !trainer.diverged(); ++e) trainer.run_episode();
  return trainer.finish();
}

}  // namespace greensec
