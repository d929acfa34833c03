#include "greensec/policy.hpp"

#include <fstream>
#include <sstream>

#include "greensec/net_policy.hpp"
#include "greensec/tensor_io.hpp"

namespace greensec {

Vec Policy::act_taped(const EnvState& state, const Vec&, PolicyTape&, EpisodeContext& ctx) const {
  return act(state, ctx);
}

StateGrad Policy::backprop_state(const PolicyTape&, const Vec& d_action) const {
  StateGrad g;
  const int n = static_cast<int>(d_action.size());
  g.d_past_effort = Vec::Zero(n);
  g.d_wildlife = Vec::Zero(n);
  return g;
}

std::uint64_t ZeroPolicy::param_hash() const {
  return hash_bytes("zero", 4, static_cast<std::uint64_t>(n_));
}

void ZeroPolicy::save(TensorWriter& w) const {
  w.meta("kind", "zero");
  w.meta("n_targets", n_);
}

Vec RandomPolicy::act(const EnvState&, EpisodeContext& ctx) const {
  if (!ctx.episode_action) {
    // Dirichlet(1,...,1) scaled to the budget, then clipped to [0,1].
    std::exponential_distribution<double> ex(1.0);
    Vec g(n_);
    for (int i = 0; i < n_; ++i) g[i] = ex(ctx.rng);
    const double s = g.sum();
    Vec a = s > 0.0 ? Vec((budget_ / s) * g) : Vec::Zero(n_);
    for (int i = 0; i < n_; ++i) a[i] = std::min(a[i], 1.0);
    ctx.episode_action = std::move(a);
  }
  return *ctx.episode_action;
}

std::uint64_t RandomPolicy::param_hash() const {
  const double fields[2] = {static_cast<double>(n_), budget_};
  return hash_bytes(fields, sizeof(fields), 0x52414e44u);
}

void RandomPolicy::save(TensorWriter& w) const {
  w.meta("kind", "random");
  w.meta("n_targets", n_);
  w.meta("budget", budget_);
}

void save_policy(const Policy& policy, const std::string& path) {
  TensorWriter w;
  policy.save(w);
  w.write(path);
}

PolicyPtr load_policy(TensorReader& r) {
  const std::string& kind = r.meta("kind");
  if (kind == "zero") return std::make_shared<ZeroPolicy>(r.meta_int("n_targets"));
  if (kind == "random")
    return std::make_shared<RandomPolicy>(r.meta_int("n_targets"), r.meta_double("budget"));
  if (kind == "net" || kind == "net_theta") return NetPolicy::load(r);
  throw ArgumentError("unknown policy kind: " + kind);
}

PolicyPtr load_policy(const std::string& path) {
  TensorReader r = TensorReader::from_file(path);
  return load_policy(r);
}

}  // namespace greensec
