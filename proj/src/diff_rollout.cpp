#include "greensec/diff_rollout.hpp"

#include <cmath>

namespace greensec {

ThetaGradResult rollout_theta_grad(const ParkInstance& park, const Vec& theta,
                                   const Policy& policy, std::uint64_t attack_seed,
                                   std::uint64_t policy_seed, bool relaxed) {
  const int n = park.n_targets;
  const int horizon = park.horizon;
  const EnvParams params{theta};

  Rng attack_rng(attack_seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  EpisodeContext ctx(policy_seed);

  // forward tape
  std::vector<EnvState> states(static_cast<std::size_t>(horizon) + 1);
  std::vector<Vec> actions(static_cast<std::size_t>(horizon) + 1);
  std::vector<Vec> probs(static_cast<std::size_t>(horizon) + 1);
  std::vector<Vec> attacks(static_cast<std::size_t>(horizon) + 1);  // sampled or relaxed
  std::vector<Vec> clamp_mask(static_cast<std::size_t>(horizon) + 1);
  std::vector<PolicyTape> tapes(static_cast<std::size_t>(horizon) + 1);

  states[0] = initial_state(park);
  for (int t = 1; t <= horizon; ++t) {
    const std::size_t st = static_cast<std::size_t>(t);
    const EnvState& prev = states[st - 1];
    actions[st] = policy.act_taped(prev, theta, tapes[st], ctx);

    Vec p(n), k(n), mask(n);
    Vec wildlife(n);
    for (int i = 0; i < n; ++i) {
      p[i] = attack_probability(park, params, prev, i);
      if (relaxed) {
        k[i] = p[i];
      } else {
        k[i] = unif(attack_rng) < p[i] ? 1.0 : 0.0;
      }
      const double pre =
          std::pow(prev.wildlife[i], park.psi) - park.alpha * k[i] * (1.0 - actions[st][i]);
      mask[i] = pre > 0.0 ? 1.0 : 0.0;
      wildlife[i] = std::max(0.0, pre);
    }
    probs[st] = std::move(p);
    attacks[st] = std::move(k);
    clamp_mask[st] = std::move(mask);
    states[st] = EnvState{actions[st], std::move(wildlife), t};
  }

  ThetaGradResult out;
  out.ret = states[static_cast<std::size_t>(horizon)].wildlife.sum();
  out.d_theta = Vec::Zero(n);

  // reverse accumulation
  Vec g_w = Vec::Ones(n);  // d ret / d wildlife at the step being processed
  std::vector<Vec> g_a(static_cast<std::size_t>(horizon) + 1, Vec::Zero(n));
  for (int t = horizon; t >= 1; --t) {
    const std::size_t st = static_cast<std::size_t>(t);
    const EnvState& prev = states[st - 1];
    const Vec& k = attacks[st];
    const Vec& mask = clamp_mask[st];
    const Vec& p = probs[st];

    // wildlife update: w_t = max(0, w_{t-1}^psi - alpha * k * (1 - a_t))
    g_a[st] += (g_w.array() * mask.array() * park.alpha * k.array()).matrix();
    const Vec g_p_raw = (g_w.array() * mask.array() * (-park.alpha) * (1.0 - actions[st].array())).matrix();
    Vec g_w_prev(n);
    for (int i = 0; i < n; ++i) {
      const double dpow = park.psi * std::pow(prev.wildlife[i], park.psi - 1.0);
      g_w_prev[i] = g_w[i] * mask[i] * dpow;
    }

    // attack likelihood: p = logistic(theta + beta * a_prev + eta * nbr-sum)
    const Vec g_logit = (g_p_raw.array() * p.array() * (1.0 - p.array())).matrix();
    out.d_theta += g_logit;
    if (t >= 2) {
      g_a[st - 1] += park.beta * g_logit;
      for (int i = 0; i < n; ++i) {
        if (g_logit[i] == 0.0) continue;
        for (int j : park.neighbors(i)) g_a[st - 1][j] += park.eta * g_logit[i];
      }
    }

    // policy input paths
    StateGrad sg = policy.backprop_state(tapes[st], g_a[st]);
    if (sg.d_theta.size() == n) out.d_theta += sg.d_theta;
    if (t >= 2) g_a[st - 1] += sg.d_past_effort;
    g_w_prev += sg.d_wildlife;

    g_w = std::move(g_w_prev);
  }
  return out;
}

}  // namespace greensec
