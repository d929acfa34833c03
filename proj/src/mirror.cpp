#include "greensec/mirror.hpp"

#include <algorithm>
#include <chrono>

namespace greensec {

StrategySets::StrategySets(const ParkInstance& park, std::uint64_t eval_root_seed,
                           int eval_episodes)
    : park_(park), eval_root_(eval_root_seed), eval_episodes_(eval_episodes) {
  if (eval_episodes_ < 1) throw ArgumentError("eval_episodes: must be >= 1");
}

int StrategySets::add_policy(PolicyPtr p, std::string name) {
  if (!p) throw ArgumentError("add_policy: null policy");
  const std::uint64_t h = p->param_hash();
  for (std::size_t i = 0; i < policy_hashes_.size(); ++i)
    if (policy_hashes_[i] == h) return static_cast<int>(i);
  policies_.push_back(std::move(p));
  policy_names_.push_back(std::move(name));
  policy_hashes_.push_back(h);
  cells_.emplace_back(thetas_.size());
  return static_cast<int>(policies_.size()) - 1;
}

int StrategySets::add_theta(EnvParams t) {
  if (t.attractiveness.size() != park_.n_targets)
    throw ArgumentError("add_theta: wrong attractiveness length");
  for (std::size_t j = 0; j < thetas_.size(); ++j)
    if (thetas_[j] == t) return static_cast<int>(j);
  thetas_.push_back(std::move(t));
  for (auto& row : cells_) row.emplace_back();
  return static_cast<int>(thetas_.size()) - 1;
}

MeanStderr StrategySets::evaluate_cell(const Policy& policy, const EnvParams& theta) const {
  const std::pair<std::uint64_t, std::uint64_t> key{policy.param_hash(), theta.hash()};
  {
    std::lock_guard<std::mutex> lock(memo_mu_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
  }
  const std::uint64_t cell_seed = mix_seed(mix_seed(eval_root_, key.first), key.second);
  const MeanStderr est = estimate_return(park_, ParamsMixture::point(theta),
                                         PolicyMixture::point(&policy), eval_episodes_, cell_seed);
  std::lock_guard<std::mutex> lock(memo_mu_);
  memo_.emplace(key, est);
  return est;
}

void StrategySets::complete_table(int n_threads) {
  std::vector<std::pair<int, int>> missing;
  for (int i = 0; i < n_policies(); ++i)
    for (int j = 0; j < n_thetas(); ++j)
      if (!cells_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) missing.push_back({i, j});
  if (missing.empty()) return;
  std::vector<MeanStderr> results(missing.size());
  parallel_for(static_cast<int>(missing.size()), n_threads, [&](int k) {
    const auto [i, j] = missing[static_cast<std::size_t>(k)];
    results[static_cast<std::size_t>(k)] =
        evaluate_cell(*policies_[static_cast<std::size_t>(i)], thetas_[static_cast<std::size_t>(j)]);
  });
  for (std::size_t k = 0; k < missing.size(); ++k)
    cells_[static_cast<std::size_t>(missing[k].first)][static_cast<std::size_t>(missing[k].second)] =
        results[k];
}

bool StrategySets::complete() const {
  for (const auto& row : cells_)
    for (const auto& c : row)
      if (!c) return false;
  return true;
}

const MeanStderr& StrategySets::cell(int row, int col) const {
  const auto& c = cells_[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
  if (!c) throw UsageError("strategy sets: cell not evaluated yet");
  return *c;
}

Mat StrategySets::return_means() const {
  if (!complete()) throw ArgumentError("return table incomplete; call complete_table first");
  Mat r(n_policies(), n_thetas());
  for (int i = 0; i < n_policies(); ++i)
    for (int j = 0; j < n_thetas(); ++j) r(i, j) = cell(i, j).mean;
  return r;
}

Mat StrategySets::return_stderrs() const {
  if (!complete()) throw ArgumentError("return table incomplete; call complete_table first");
  Mat r(n_policies(), n_thetas());
  for (int i = 0; i < n_policies(); ++i)
    for (int j = 0; j < n_thetas(); ++j) r(i, j) = cell(i, j).stderr_;
  return r;
}

PayoffMatrix build_regret_payoffs(const Mat& returns) {
  if (returns.rows() < 1 || returns.cols() < 1)
    throw ArgumentError("build_regret_payoffs: empty return table");
  if (!returns.allFinite())
    throw ArgumentError("build_regret_payoffs: return table has non-finite entries");
  PayoffMatrix p;
  p.entries = returns;
  for (Eigen::Index j = 0; j < returns.cols(); ++j)
    p.entries.col(j).array() -= returns.col(j).maxCoeff();
  return p;
}

Vec perturb(const Vec& theta, const UncertaintySet& box, double scale, Rng& rng) {
  if (!box.contains(theta))
    throw ArgumentError("perturb: theta must lie inside the uncertainty box");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec out = theta;
  for (int i = 0; i < out.size(); ++i)
    out[i] += scale * (box.upper[i] - box.lower[i]) * gauss(rng);
  return box.clip(std::move(out));
}

void MirrorConfig::validate() const {
  if (!std::isfinite(epsilon)) throw ArgumentError("mirror.epsilon: must be finite");
  if (perturbations < 0) throw ArgumentError("mirror.perturbations: must be >= 0");
  if (perturb_scale < 0.0) throw ArgumentError("mirror.perturb_scale: must be >= 0");
  if (epoch_cap < 1) throw ArgumentError("mirror.epoch_cap: must be >= 1");
  if (eval_episodes < 1) throw ArgumentError("mirror.eval_episodes: must be >= 1");
  if (n_threads < 1) throw ArgumentError("mirror.n_threads: must be >= 1");
  agent_train.validate();
  nature.validate();
}

namespace {

MixedStrategy to_full_mixture(const MixedStrategy& partial, int full_size) {
  MixedStrategy out;
  out.probs.assign(static_cast<std::size_t>(full_size), 0.0);
  for (std::size_t i = 0; i < partial.probs.size(); ++i) out.probs[i] = partial.probs[i];
  return out;
}

ParamsMixture theta_mixture(const std::vector<EnvParams>& thetas, const MixedStrategy& weights) {
  ParamsMixture m;
  m.support = thetas;
  m.weights = weights;
  // drop negligible weights for cheaper per-episode sampling
  return m;
}

}  // namespace

MirrorResult run_mirror(const ParkInstance& park, const NatureDomain& domain,
                        const MirrorConfig& cfg) {
  cfg.validate();
  park.validate();
  domain.box.validate();
  if (domain.box.size() != park.n_targets)
    throw ArgumentError("uncertainty: box size must equal park.n_targets");

  using clock = std::chrono::steady_clock;
  Rng loop_rng(mix_seed(cfg.seed, 0x313A0Au));

  MirrorResult res;
  res.sets = std::make_shared<StrategySets>(park, mix_seed(cfg.seed, seed_tag::eval),
                                            cfg.eval_episodes);
  StrategySets& sets = *res.sets;

  // line 1: initial parameter setting, uniform from the domain
  EnvParams theta0;
  if (domain.finite()) {
    std::uniform_int_distribution<std::size_t> pick(0, domain.points.size() - 1);
    theta0 = domain.points[pick(loop_rng)];
  } else {
    theta0 = EnvParams{domain.box.sample(loop_rng)};
  }
  sets.add_theta(theta0);

  // line 2: baseline strategies seed the policy set
  {
    TrainConfig mid_cfg = cfg.agent_train;
    mid_cfg.seed = mix_seed(cfg.seed, 0x31DDu);
    auto middle =
        train_agent(park, ParamsMixture::point(EnvParams{domain.box.midpoint()}), mid_cfg);
    res.middle_index = sets.add_policy(middle.policy, "baseline_middle");
    res.random_index = sets.add_policy(
        std::make_shared<RandomPolicy>(park.n_targets, park.budget), "baseline_random");
    res.zero_index = sets.add_policy(std::make_shared<ZeroPolicy>(park.n_targets), "baseline_zero");
  }

  for (int epoch = 1; epoch <= cfg.epoch_cap; ++epoch) {
    const auto t0 = clock::now();
    EpochReport rep;
    rep.epoch = epoch;

    sets.complete_table(cfg.n_threads);
    const Mat returns = sets.return_means();
    const PayoffMatrix payoffs = build_regret_payoffs(returns);
    GameSolution eq;
    try {
      eq = solve_zero_sum(payoffs);
    } catch (const NumericError& e) {
      throw NumericError(std::string("mirror: restricted Nash solve failed: ") + e.what());
    }
    rep.game_value = eq.value;
    rep.agent_mix = eq.row;
    rep.nature_mix = eq.col;

    // agent and nature best responses (lines 7-8); independent derived
    // seeds, so the two trainings may run concurrently
    TrainResult agent_br;
    EnvParams theta_e;
    PolicyPtr alt_policy;
    double nature_regret = 0.0;
    parallel_for(2, std::min(cfg.n_threads, 2), [&](int task) {
      if (task == 0) {
        TrainConfig agent_cfg = cfg.agent_train;
        agent_cfg.seed = mix_seed(cfg.seed, 0xA6E7u, static_cast<std::uint64_t>(epoch));
        agent_br = train_agent(park, theta_mixture(sets.thetas(), eq.col), agent_cfg);
        return;
      }
      if (domain.finite()) {
        // discrete domain: pick the point with the highest estimated regret
        // against the equilibrium mixture, then train its best response
        double best = 0.0;
        int best_idx = -1;
        for (std::size_t pi = 0; pi < domain.points.size(); ++pi) {
          const EnvParams& cand = domain.points[pi];
          double colmax = 0.0;
          double mix_ret = 0.0;
          for (int i = 0; i < sets.n_policies(); ++i) {
            const double r =
                sets.evaluate_cell(*sets.policies()[static_cast<std::size_t>(i)], cand).mean;
            colmax = i == 0 ? r : std::max(colmax, r);
            mix_ret += eq.row.probs[static_cast<std::size_t>(i)] * r;
          }
          const double regret = colmax - mix_ret;
          if (best_idx < 0 || regret > best) {
            best = regret;
            best_idx = static_cast<int>(pi);
          }
        }
        theta_e = domain.points[static_cast<std::size_t>(best_idx)];
        TrainConfig alt_cfg = cfg.agent_train;
        alt_cfg.seed = mix_seed(cfg.seed, 0xA17u, static_cast<std::uint64_t>(epoch));
        alt_policy = train_agent(park, ParamsMixture::point(theta_e), alt_cfg).policy;
        nature_regret = best;
      } else {
        NatureConfig nat_cfg = cfg.nature;
        nat_cfg.train.seed = mix_seed(cfg.seed, 0x7A7u, static_cast<std::uint64_t>(epoch));
        auto nat = train_nature(park, sets.policies(), eq.row, domain.box, nat_cfg);
        theta_e = nat.theta;
        alt_policy = nat.alt_policy;
        nature_regret = nat.regret.mean;
      }
    });
    rep.nature_oracle_regret = nature_regret;

    // convergence deltas (line 9): does either best response improve on the
    // restricted equilibrium by more than epsilon?
    const double eq_return = [&] {
      double v = 0.0;
      for (int i = 0; i < sets.n_policies(); ++i)
        for (int j = 0; j < sets.n_thetas(); ++j)
          v += eq.row.probs[static_cast<std::size_t>(i)] * eq.col.probs[static_cast<std::size_t>(j)] *
               returns(i, j);
      return v;
    }();
    double agent_br_return = 0.0;
    for (int j = 0; j < sets.n_thetas(); ++j)
      agent_br_return += eq.col.probs[static_cast<std::size_t>(j)] *
                         sets.evaluate_cell(*agent_br.policy, sets.thetas()[static_cast<std::size_t>(j)]).mean;
    rep.agent_delta = agent_br_return - eq_return;

    {
      double colmax = 0.0, mix_ret = 0.0;
      for (int i = 0; i < sets.n_policies(); ++i) {
        const double r = sets.evaluate_cell(*sets.policies()[static_cast<std::size_t>(i)], theta_e).mean;
        colmax = i == 0 ? r : std::max(colmax, r);
        mix_ret += eq.row.probs[static_cast<std::size_t>(i)] * r;
      }
      colmax = std::max(colmax, sets.evaluate_cell(*agent_br.policy, theta_e).mean);
      if (alt_policy) colmax = std::max(colmax, sets.evaluate_cell(*alt_policy, theta_e).mean);
      rep.nature_delta = (colmax - mix_ret) - (-eq.value);
    }

    rep.n_policies = sets.n_policies();
    rep.n_thetas = sets.n_thetas();
    const bool converged = rep.agent_delta <= cfg.epsilon && rep.nature_delta <= cfg.epsilon;
    if (converged) {
      rep.seconds = std::chrono::duration<double>(clock::now() - t0).count();
      res.reports.push_back(std::move(rep));
      res.converged = true;
      res.epochs = epoch;
      res.final_mixture = to_full_mixture(eq.row, sets.n_policies());
      res.final_nature_mixture = to_full_mixture(eq.col, sets.n_thetas());
      return res;
    }

    // lines 12-14: perturbation responses around nature's point.  The
    // perturbed thetas are drawn serially; the responses train in parallel
    // with per-index seeds.
    std::vector<EnvParams> new_thetas{theta_e};
    std::vector<std::pair<PolicyPtr, std::string>> new_policies;
    new_policies.push_back({agent_br.policy, "agent_e" + std::to_string(epoch)});
    if (alt_policy) new_policies.push_back({alt_policy, "alt_e" + std::to_string(epoch)});
    std::vector<EnvParams> pert_thetas;
    for (int o = 1; o <= cfg.perturbations; ++o) {
      if (domain.finite()) {
        std::uniform_int_distribution<std::size_t> pick(0, domain.points.size() - 1);
        pert_thetas.push_back(domain.points[pick(loop_rng)]);
      } else {
        pert_thetas.push_back(
            EnvParams{perturb(theta_e.attractiveness, domain.box, cfg.perturb_scale, loop_rng)});
      }
    }
    std::vector<PolicyPtr> responses(pert_thetas.size());
    parallel_for(static_cast<int>(pert_thetas.size()), cfg.n_threads, [&](int idx) {
      TrainConfig pert_cfg = cfg.agent_train;
      pert_cfg.seed = mix_seed(cfg.seed, 0x9E2700u + static_cast<std::uint64_t>(idx + 1),
                               static_cast<std::uint64_t>(epoch));
      responses[static_cast<std::size_t>(idx)] =
          train_agent(park, ParamsMixture::point(pert_thetas[static_cast<std::size_t>(idx)]), pert_cfg)
              .policy;
    });
    for (std::size_t idx = 0; idx < pert_thetas.size(); ++idx) {
      new_thetas.push_back(pert_thetas[idx]);
      new_policies.push_back({responses[idx], "perturb_e" + std::to_string(epoch) + "_" +
                                                  std::to_string(idx + 1)});
    }

    // lines 16-18: grow both sets and refresh the payoff table
    for (auto& t : new_thetas) sets.add_theta(std::move(t));
    for (auto& [p, name] : new_policies) sets.add_policy(std::move(p), std::move(name));
    sets.complete_table(cfg.n_threads);

    rep.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    res.reports.push_back(std::move(rep));
    res.epochs = epoch;
  }

  // epoch cap reached: solve once more over the complete final sets
  sets.complete_table(cfg.n_threads);
  const GameSolution final_eq = solve_zero_sum(build_regret_payoffs(sets.return_means()));
  res.final_mixture = to_full_mixture(final_eq.row, sets.n_policies());
  res.final_nature_mixture = to_full_mixture(final_eq.col, sets.n_thetas());
  return res;
}

}  // namespace greensec
