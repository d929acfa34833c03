#pragma once

#include <deque>
#include <memory>

#include "greensec/net_policy.hpp"
#include "greensec/park.hpp"

namespace greensec {

struct TrainConfig {
  int episodes = 2000;  // J
  int buffer_capacity = 50000;
  int batch_size = 64;
  int warmup_transitions = 640;  // updates start once the buffer holds this many
  int updates_per_step = 1;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double polyak = 0.005;      // target network mixing rate
  double noise_start = 0.10;  // exploration noise scale, fraction of budget
  double noise_end = 0.01;    // linear decay endpoint
  double discount = 1.0;      // terminal-reward finite-horizon setting
  std::vector<int> hidden = {16, 32};
  int eval_every = 100;   // episodes between checkpoint evaluations
  int eval_episodes = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Transition {
  Vec features;
  Vec action;
  double reward = 0.0;
  Vec next_features;
  bool terminal = false;
};

// Actor-critic learner: deterministic policy gradient with a replay buffer,
// target networks and Gaussian action noise.  All state is owned by the
// trainer and every random draw comes from the seeded stream, so training is
// bit-reproducible.
class DdpgCore {
 public:
  DdpgCore(FeatureSpec spec, const TrainConfig& cfg, Rng& init_rng);

  Vec act_greedy(const EnvState& s, const Vec* theta) const;
  Vec act_explore(const EnvState& s, const Vec* theta, double noise_scale, Rng& noise_rng,
                  const ParkInstance& park) const;

  void store(Transition tr);
  bool can_update() const;
  void update(Rng& sample_rng);  // one minibatch: critic step, actor step, target mix

  bool params_finite() const;
  std::shared_ptr<NetPolicy> snapshot(Vec baked_theta = {}) const;

  // Exposed for gradient checks: loss and flat parameter gradient on a batch.
  double critic_loss_and_grad(const std::vector<Transition>& batch, Vec* grad) const;
  double actor_loss_and_grad(const std::vector<Transition>& batch, Vec* grad) const;

  Mlp& actor() { return actor_; }
  Mlp& critic() { return critic_; }
  const FeatureSpec& spec() const { return spec_; }
  const std::deque<Transition>& buffer() const { return buffer_; }

 private:
  FeatureSpec spec_;
  TrainConfig cfg_;
  Mlp actor_, critic_, actor_target_, critic_target_;
  Adam actor_opt_, critic_opt_;
  std::deque<Transition> buffer_;
};

struct TrainResult {
  std::shared_ptr<NetPolicy> policy;
  double eval_return = 0.0;  // periodic-eval estimate of the returned policy
  bool diverged = false;
  int episodes_run = 0;
};

// Best-response learner for the defender (one episode per call).  Each
// episode samples one parameter point from the nature mixture, rolls out
// with exploration noise and applies minibatch updates every step.
class AgentTrainer {
 public:
  AgentTrainer(const ParkInstance& park, ParamsMixture mixture, TrainConfig cfg);

  void run_episode();
  int episodes_run() const { return episode_; }
  bool diverged() const { return diverged_; }
  void set_mixture(ParamsMixture m);  // adversarial baselines move the point
  DdpgCore& core() { return core_; }

  std::shared_ptr<NetPolicy> snapshot() const { return core_.snapshot(); }
  TrainResult finish();  // best checkpoint by periodic evaluation

 private:
  void maybe_evaluate();

  const ParkInstance& park_;
  ParamsMixture mixture_;
  TrainConfig cfg_;
  DdpgCore core_;
  Rng rng_;
  int episode_ = 0;
  bool diverged_ = false;
  double best_eval_ = 0.0;
  bool has_best_ = false;
  Vec best_actor_params_;
};

// Trains to completion and returns the policy (Algorithm 1's agent oracle).
TrainResult train_agent(const ParkInstance& park, const ParamsMixture& nature_mixture,
                        const TrainConfig& cfg);

}  // namespace greensec
