#include "greensec/net_policy.hpp"

#include <algorithm>
#include <sstream>

#include "greensec/tensor_io.hpp"

namespace greensec {

Mat budget_softmax(const Mat& logits, double budget, Mat* softmax_out) {
  Mat s(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    Vec z = logits.col(c);
    z.array() -= z.maxCoeff();
    Vec e = z.array().exp();
    s.col(c) = e / e.sum();
  }
  if (softmax_out) *softmax_out = s;
  return (budget * s).cwiseMin(1.0);
}

Mat budget_softmax_backward(const Mat& g_action, const Mat& softmax, double budget) {
  Mat g_logits(softmax.rows(), softmax.cols());
  for (Eigen::Index c = 0; c < softmax.cols(); ++c) {
    const Vec s = softmax.col(c);
    // clip passes gradient only where budget * s < 1
    Vec g_s(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
      g_s[i] = budget * s[i] < 1.0 ? budget * g_action(i, c) : 0.0;
    const double dot = s.dot(g_s);
    g_logits.col(c) = s.array() * (g_s.array() - dot);
  }
  return g_logits;
}

FeatureSpec FeatureSpec::plain(const ParkInstance& park) {
  FeatureSpec f;
  f.n_targets = park.n_targets;
  f.horizon = park.horizon;
  f.budget = park.budget;
  f.wildlife_norm = std::max(park.initial_wildlife.maxCoeff(), 1e-9);
  return f;
}

FeatureSpec FeatureSpec::theta_conditioned(const ParkInstance& park, const UncertaintySet& box) {
  FeatureSpec f = plain(park);
  f.with_theta = true;
  f.theta_lower = box.lower;
  f.theta_width = box.upper - box.lower;
  return f;
}

Vec FeatureSpec::theta_feature(const Vec& theta) const {
  Vec tf(n_targets);
  for (int i = 0; i < n_targets; ++i)
    tf[i] = theta_width[i] > 0.0 ? (theta[i] - theta_lower[i]) / theta_width[i] : 0.5;
  return tf;
}

Vec FeatureSpec::build(const EnvState& s, const Vec* theta) const {
  Vec x(dim());
  int off = 0;
  if (with_theta) {
    if (!theta) throw UsageError("feature build: theta-conditioned net needs theta");
    x.segment(0, n_targets) = theta_feature(*theta);
    off = n_targets;
  }
  x.segment(off, n_targets) = s.past_effort;
  x.segment(off + n_targets, n_targets) = s.wildlife / wildlife_norm;
  x[off + 2 * n_targets] = static_cast<double>(s.timestep) / horizon;
  return x;
}

NetPolicy::NetPolicy(Mlp actor, FeatureSpec spec, Vec baked_theta)
    : actor_(std::move(actor)), spec_(std::move(spec)), baked_theta_(std::move(baked_theta)) {
  if (actor_.in_dim() != spec_.dim())
    throw ArgumentError("net policy: actor input dimension does not match feature spec");
  if (actor_.out_dim() != spec_.n_targets)
    throw ArgumentError("net policy: actor output dimension must equal n_targets");
}

Vec NetPolicy::act(const EnvState& state, EpisodeContext&) const {
  if (spec_.with_theta) {
    if (baked_theta_.size() == 0)
      throw UsageError("net policy: theta-conditioned policy has no baked theta");
    return act_with_theta(state, baked_theta_);
  }
  return act_with_theta(state, Vec());
}

Vec NetPolicy::act_with_theta(const EnvState& state, const Vec& theta) const {
  const Vec x = spec_.build(state, spec_.with_theta ? &theta : nullptr);
  const Mat logits = actor_.forward(x);
  return budget_softmax(logits, spec_.budget).col(0);
}

std::uint64_t NetPolicy::param_hash() const {
  std::uint64_t h = actor_.param_hash();
  if (baked_theta_.size() > 0) h = hash_vec(baked_theta_, h);
  return h;
}

Vec NetPolicy::act_taped(const EnvState& state, const Vec& theta, PolicyTape& tape,
                         EpisodeContext&) const {
  const Vec x = spec_.build(state, spec_.with_theta ? &theta : nullptr);
  std::vector<Mat> mlp_tape;
  const Mat logits = actor_.forward(x, &mlp_tape);
  Mat softmax;
  const Vec action = budget_softmax(logits, spec_.budget, &softmax).col(0);
  tape.slots.clear();
  for (const auto& m : mlp_tape) tape.slots.push_back(m.col(0));
  tape.slots.push_back(softmax.col(0));
  return action;
}

StateGrad NetPolicy::backprop_state(const PolicyTape& tape, const Vec& d_action) const {
  const std::size_t n_tape = tape.slots.size() - 1;
  const Vec& softmax = tape.slots.back();
  const Mat g_logits = budget_softmax_backward(d_action, softmax, spec_.budget);
  std::vector<Mat> mlp_tape;
  mlp_tape.reserve(n_tape);
  for (std::size_t i = 0; i < n_tape; ++i) mlp_tape.push_back(tape.slots[i]);
  const Vec gx = actor_.backward(mlp_tape, g_logits, nullptr, true).col(0);

  StateGrad g;
  const int n = spec_.n_targets;
  int off = 0;
  if (spec_.with_theta) {
    g.d_theta = Vec::Zero(n);
    for (int i = 0; i < n; ++i)
      if (spec_.theta_width[i] > 0.0) g.d_theta[i] = gx[i] / spec_.theta_width[i];
    off = n;
  }
  g.d_past_effort = gx.segment(off, n);
  g.d_wildlife = gx.segment(off + n, n) / spec_.wildlife_norm;
  return g;
}

void NetPolicy::save(TensorWriter& w) const {
  w.meta("kind", kind());
  w.meta("n_targets", spec_.n_targets);
  w.meta("horizon", spec_.horizon);
  w.meta("budget", spec_.budget);
  w.meta("wildlife_norm", spec_.wildlife_norm);
  std::ostringstream layers;
  for (std::size_t i = 0; i < actor_.layers().size(); ++i)
    layers << (i ? " " : "") << actor_.layers()[i];
  w.meta("layers", layers.str());
  w.tensor("actor_params", actor_.params());
  if (spec_.with_theta) {
    w.tensor("theta_lower", spec_.theta_lower);
    w.tensor("theta_width", spec_.theta_width);
    if (baked_theta_.size() > 0) w.tensor("baked_theta", baked_theta_);
  }
}

std::shared_ptr<NetPolicy> NetPolicy::load(TensorReader& r) {
  FeatureSpec spec;
  spec.n_targets = r.meta_int("n_targets");
  spec.horizon = r.meta_int("horizon");
  spec.budget = r.meta_double("budget");
  spec.wildlife_norm = r.meta_double("wildlife_norm");
  spec.with_theta = r.meta("kind") == "net_theta";
  if (spec.with_theta) {
    spec.theta_lower = r.tensor_vec("theta_lower");
    spec.theta_width = r.tensor_vec("theta_width");
  }
  std::vector<int> layers;
  {
    std::istringstream ls(r.meta("layers"));
    int v;
    while (ls >> v) layers.push_back(v);
  }
  Rng dummy(0);
  Mlp actor(layers, dummy);
  Vec params = r.tensor_vec("actor_params");
  if (params.size() != actor.n_params())
    throw ArgumentError("net policy checkpoint: parameter count mismatch");
  actor.params() = params;
  Vec baked;
  if (spec.with_theta && r.has_tensor("baked_theta")) baked = r.tensor_vec("baked_theta");
  return std::make_shared<NetPolicy>(std::move(actor), std::move(spec), std::move(baked));
}

}  // namespace greensec
