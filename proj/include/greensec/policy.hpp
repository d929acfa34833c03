#pragma once

#include <memory>
#include <optional>
#include <string>

#include "greensec/common.hpp"
#include "greensec/park.hpp"

namespace greensec {

class TensorWriter;
class TensorReader;

// Per-episode scratch handed to Policy::act.  Policies stay immutable and
// thread-safe; any per-episode randomness (e.g. the random baseline's draw)
// comes from the context stream.
struct EpisodeContext {
  Rng rng;
  std::optional<Vec> episode_action;  // cached state-independent draw

  explicit EpisodeContext(std::uint64_t seed = 0) : rng(seed) {}
};

// Tape recorded by a differentiable policy during act_taped, consumed by
// backprop_state.  Layout is private to the policy implementation.
struct PolicyTape {
  std::vector<Vec> slots;
};

// Gradient of a scalar loss w.r.t. a policy's inputs at one step.
struct StateGrad {
  Vec d_past_effort;
  Vec d_wildlife;
  Vec d_theta;  // empty unless the policy is theta-conditioned
};

class Policy {
 public:
  virtual ~Policy() = default;

  // Deterministic feasible action for the state.  Pure function of
  // (parameters, state, context stream).
  virtual Vec act(const EnvState& state, EpisodeContext& ctx) const = 0;

  virtual std::string kind() const = 0;
  virtual std::uint64_t param_hash() const = 0;

  // Differentiable rollout hooks (nature oracle and adversarial baselines).
  // Non-differentiable policies keep the zero defaults.
  virtual bool differentiable() const { return false; }
  virtual Vec act_taped(const EnvState& state, const Vec& theta, PolicyTape& tape,
                        EpisodeContext& ctx) const;
  virtual StateGrad backprop_state(const PolicyTape& tape, const Vec& d_action) const;

  virtual void save(TensorWriter& w) const = 0;
};

using PolicyPtr = std::shared_ptr<const Policy>;

// Always plays the zero effort vector.
class ZeroPolicy : public Policy {
 public:
  explicit ZeroPolicy(int n_targets) : n_(n_targets) {}
  Vec act(const EnvState&, EpisodeContext&) const override { return Vec::Zero(n_); }
  std::string kind() const override { return "zero"; }
  std::uint64_t param_hash() const override;
  void save(TensorWriter& w) const override;

 private:
  int n_;
};

// State-independent baseline: each episode draws one feasible effort vector
// (budget-scaled Dirichlet, clipped to [0,1]) and plays it every step.
class RandomPolicy : public Policy {
 public:
  RandomPolicy(int n_targets, double budget) : n_(n_targets), budget_(budget) {}
  Vec act(const EnvState&, EpisodeContext& ctx) const override;
  std::string kind() const override { return "random"; }
  std::uint64_t param_hash() const override;
  void save(TensorWriter& w) const override;

 private:
  int n_;
  double budget_;
};

// Checkpoint round trip for any built-in policy kind.
void save_policy(const Policy& policy, const std::string& path);
PolicyPtr load_policy(const std::string& path);
PolicyPtr load_policy(TensorReader& r);

}  // namespace greensec
