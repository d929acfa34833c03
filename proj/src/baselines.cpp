#include "greensec/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <memory>

namespace greensec {

TrainResult middle_baseline(const ParkInstance& park, const NatureDomain& domain,
                            const TrainConfig& cfg) {
  return train_agent(park, ParamsMixture::point(EnvParams{domain.box.midpoint()}), cfg);
}

PolicyPtr random_baseline(const ParkInstance& park) {
  return std::make_shared<RandomPolicy>(park.n_targets, park.budget);
}

void RarlConfig::validate() const {
  train.validate();
  if (kappa < 1) throw ArgumentError("rarl.kappa: must be >= 1");
  if (!(theta_lr > 0.0)) throw ArgumentError("rarl.theta_lr: must be positive");
}

namespace {

Vec sigmoid_space_init(const UncertaintySet& box, Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  Vec z(box.size());
  for (int i = 0; i < z.size(); ++i) {
    const double p = u(rng);
    z[i] = std::log(p / (1.0 - p));
  }
  return z;
}

Vec sigmoid_space_theta(const UncertaintySet& box, const Vec& z) {
  Vec theta(z.size());
  for (int i = 0; i < z.size(); ++i) {
    const double w = box.upper[i] - box.lower[i];
    theta[i] = w > 0.0 ? box.lower[i] + w * logistic(z[i]) : box.lower[i];
  }
  return theta;
}

}  // namespace

RarlResult rarl_maximin(const ParkInstance& park, const UncertaintySet& box,
                        const RarlConfig& cfg) {
  cfg.validate();
  if (box.is_point()) {  // no uncertainty: plain best-response training
    RarlResult out;
    out.protagonist = train_agent(park, ParamsMixture::point(EnvParams{box.midpoint()}), cfg.train);
    out.adversary_theta = EnvParams{box.midpoint()};
    return out;
  }

  Rng rng(mix_seed(cfg.train.seed, 0x4A51u));
  Vec z = sigmoid_space_init(box, rng);
  Adam z_opt(static_cast<int>(z.size()), cfg.theta_lr);
  Vec theta = sigmoid_space_theta(box, z);

  AgentTrainer protagonist(park, ParamsMixture::point(EnvParams{theta}), cfg.train);
  int episodes_left = cfg.train.episodes;
  while (episodes_left > 0 && !protagonist.diverged()) {
    // protagonist block on the adversary's current point
    const int proto_block = std::min(cfg.kappa, episodes_left);
    for (int e = 0; e < proto_block; ++e) protagonist.run_episode();
    episodes_left -= proto_block;
    if (episodes_left <= 0) break;

    // adversary block: descend r(pi, theta) through the rollout gradient
    auto frozen = protagonist.snapshot();
    const int adv_block = std::min(cfg.kappa, episodes_left);
    for (int e = 0; e < adv_block; ++e) {
      const std::uint64_t attack_seed = rng();
      const ThetaGradResult g = rollout_theta_grad(
          park, theta, *frozen, attack_seed, mix_seed(attack_seed, seed_tag::policy), false);
      Vec g_z(z.size());
      for (int i = 0; i < z.size(); ++i) {
        const double w = box.upper[i] - box.lower[i];
        const double s = logistic(z[i]);
        g_z[i] = g.d_theta[i] * w * s * (1.0 - s);
      }
      z_opt.step(z, g_z);  // descend the protagonist's return
      theta = sigmoid_space_theta(box, z);
    }
    episodes_left -= adv_block;
    protagonist.set_mixture(ParamsMixture::point(EnvParams{theta}));
  }

  RarlResult out;
  out.adversary_theta = EnvParams{theta};
  if (protagonist.diverged()) {
    out.protagonist = protagonist.finish();
  } else {
    out.protagonist.policy = protagonist.snapshot();
    out.protagonist.episodes_run = protagonist.episodes_run();
  }
  return out;
}

RarlResult rarl_regret(const ParkInstance& park, const UncertaintySet& box,
                       const RarlConfig& cfg) {
  cfg.validate();
  if (box.is_point()) {
    RarlResult out;
    out.protagonist = train_agent(park, ParamsMixture::point(EnvParams{box.midpoint()}), cfg.train);
    out.adversary_theta = EnvParams{box.midpoint()};
    return out;
  }

  NatureConfig nat_cfg;
  nat_cfg.train = cfg.train;
  nat_cfg.train.seed = mix_seed(cfg.train.seed, 0x4A52u);
  nat_cfg.kappa = std::max(1, cfg.kappa / 2);  // inner wake-sleep inside adversary blocks
  nat_cfg.theta_lr = cfg.theta_lr;

  // bootstrap the protagonist on a random interior point
  Rng rng(mix_seed(cfg.train.seed, 0x4A53u));
  Vec theta = sigmoid_space_theta(box, sigmoid_space_init(box, rng));
  AgentTrainer protagonist(park, ParamsMixture::point(EnvParams{theta}), cfg.train);
  std::unique_ptr<NatureTrainer> adversary;

  int episodes_left = cfg.train.episodes;
  while (episodes_left > 0 && !protagonist.diverged()) {
    const int proto_block = std::min(cfg.kappa, episodes_left);
    for (int e = 0; e < proto_block; ++e) protagonist.run_episode();
    episodes_left -= proto_block;
    if (episodes_left <= 0) break;

    auto frozen = protagonist.snapshot();
    if (!adversary) {
      adversary = std::make_unique<NatureTrainer>(
          park, std::vector<PolicyPtr>{frozen}, MixedStrategy::point(1, 0), box, nat_cfg);
    } else {
      adversary->set_opponent({frozen}, MixedStrategy::point(1, 0));
    }
    const int adv_block = std::min(cfg.kappa, episodes_left);
    for (int e = 0; e < adv_block && !adversary->diverged(); ++e) adversary->run_episode();
    episodes_left -= adv_block;
    theta = adversary->theta();
    protagonist.set_mixture(ParamsMixture::point(EnvParams{theta}));
  }

  RarlResult out;
  out.adversary_theta = EnvParams{theta};
  if (protagonist.diverged()) {
    out.protagonist = protagonist.finish();
  } else {
    out.protagonist.policy = protagonist.snapshot();
    out.protagonist.episodes_run = protagonist.episodes_run();
  }
  return out;
}

// --- evaluation harness ---

MethodSpec pure_method(const std::string& name, int policy_index, int n_policies) {
  return {name, MixedStrategy::point(n_policies, policy_index)};
}

std::vector<EvalResult> evaluate_max_regret(StrategySets& sets,
                                            const std::vector<MethodSpec>& methods,
                                            const std::vector<EnvParams>& audit_thetas,
                                            int n_threads) {
  sets.complete_table(n_threads);
  const Mat r = sets.return_means();
  const Mat se = sets.return_stderrs();
  const int np = sets.n_policies(), nt = sets.n_thetas();

  for (const auto& m : methods) {
    if (static_cast<int>(m.mixture.probs.size()) != np)
      throw ArgumentError("evaluate_max_regret: method \"" + m.name +
                          "\" support does not match the augmented policy set");
    m.mixture.validate();
  }

  // column maxima and their rows (the pi*(theta) approximation)
  std::vector<int> argmax_row(static_cast<std::size_t>(nt));
  Vec colmax(nt);
  for (int j = 0; j < nt; ++j) {
    int best = 0;
    for (int i = 1; i < np; ++i)
      if (r(i, j) > r(best, j)) best = i;
    argmax_row[static_cast<std::size_t>(j)] = best;
    colmax[j] = r(best, j);
  }

  // audit columns (held-out thetas, not part of the sets)
  Mat audit_r(np, static_cast<int>(audit_thetas.size()));
  if (!audit_thetas.empty()) {
    parallel_for(np * static_cast<int>(audit_thetas.size()), n_threads, [&](int k) {
      const int i = k / static_cast<int>(audit_thetas.size());
      const int j = k % static_cast<int>(audit_thetas.size());
      audit_r(i, j) =
          sets.evaluate_cell(*sets.policies()[static_cast<std::size_t>(i)], audit_thetas[static_cast<std::size_t>(j)])
              .mean;
    });
  }

  std::vector<EvalResult> out;
  for (const auto& m : methods) {
    EvalResult res;
    res.method = m.name;
    Vec x(np);
    for (int i = 0; i < np; ++i) x[i] = m.mixture.probs[static_cast<std::size_t>(i)];

    int worst_col = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < nt; ++j) {
      const double regret = colmax[j] - x.dot(r.col(j));
      if (regret > worst) {
        worst = regret;
        worst_col = j;
      }
    }
    res.max_regret = worst;
    {
      double var = sq(se(argmax_row[static_cast<std::size_t>(worst_col)], worst_col));
      for (int i = 0; i < np; ++i) var += sq(x[i] * se(i, worst_col));
      res.stderr_ = std::sqrt(var);
    }
    if (!audit_thetas.empty()) {
      double worst_audit = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < static_cast<int>(audit_thetas.size()); ++j) {
        const double regret = audit_r.col(j).maxCoeff() - x.dot(audit_r.col(j));
        worst_audit = std::max(worst_audit, regret);
      }
      res.audit_max_regret = worst_audit;
    }
    out.push_back(std::move(res));
  }
  return out;
}

// --- experiment grid ---

void ExperimentConfig::validate() const {
  if (n_targets <= 0) throw ArgumentError("experiment.n_targets: must be positive");
  if (horizon <= 0) throw ArgumentError("experiment.horizon: must be positive");
  if (budget < 0 || budget > n_targets)
    throw ArgumentError("experiment.budget: must satisfy 0 <= budget <= n_targets");
  if (interval < 0) throw ArgumentError("experiment.interval: must be >= 0");
  if (!(deterrence > 0)) throw ArgumentError("experiment.deterrence: must be positive (|beta|)");
  if (wildlife_init != "random" && wildlife_init != "peaked" && wildlife_init != "flatter")
    throw ArgumentError("experiment.wildlife_init: must be random, peaked or flatter");
  if (!(eta > 0)) throw ArgumentError("experiment.eta: must be positive");
  if (!(alpha > 0)) throw ArgumentError("experiment.alpha: must be positive");
  if (!(psi > 1)) throw ArgumentError("experiment.psi: must be > 1");
  if (trials < 1) throw ArgumentError("experiment.trials: must be >= 1");
  if (methods.empty()) throw ArgumentError("experiment.methods: need at least one method");
  for (const auto& m : methods)
    if (m != "mirror" && m != "middle" && m != "random" && m != "zero" && m != "rarl_maximin" &&
        m != "rarl_regret")
      throw ArgumentError("experiment.methods: unknown method \"" + m + "\"");
  if (audit_points < 0) throw ArgumentError("experiment.audit_points: must be >= 0");
  if (baseline_variants < 0) throw ArgumentError("experiment.baseline_variants: must be >= 0");
  mirror.validate();
  rarl.validate();
}

ParkInstance build_park(const ExperimentConfig& cfg, std::uint64_t trial_seed) {
  ParkInstance park = ParkInstance::make(cfg.n_targets, cfg.horizon, cfg.budget);
  park.alpha = cfg.alpha;
  park.psi = cfg.psi;
  park.beta = -cfg.deterrence;
  park.eta = cfg.eta;
  Rng rng(mix_seed(trial_seed, 0x317Du));
  if (cfg.wildlife_init == "random") park.initial_wildlife = wildlife_random(park, rng);
  else if (cfg.wildlife_init == "peaked") park.initial_wildlife = wildlife_peaked(park);
  else park.initial_wildlife = wildlife_flatter(park);
  park.validate();
  return park;
}

NatureDomain build_domain(const ExperimentConfig& cfg, const ParkInstance& park,
                          std::uint64_t trial_seed) {
  Rng rng(mix_seed(trial_seed, 0xB0D5u));
  return NatureDomain::from_box(make_experiment_box(park.n_targets, cfg.interval, rng));
}

std::vector<TrialRow> run_trial(const ExperimentConfig& cfg, int trial) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  const std::uint64_t trial_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(trial));
  const ParkInstance park = build_park(cfg, trial_seed);
  const NatureDomain domain = build_domain(cfg, park, trial_seed);

  MirrorConfig mir = cfg.mirror;
  mir.seed = trial_seed;
  mir.nature.train.seed = trial_seed;
  mir.agent_train.seed = trial_seed;

  std::map<std::string, double> runtimes;
  const auto t_mirror0 = clock::now();
  MirrorResult run = run_mirror(park, domain, mir);
  runtimes["mirror"] = std::chrono::duration<double>(clock::now() - t_mirror0).count();
  StrategySets& sets = *run.sets;

  // family anchors for baseline perturbation variants
  std::map<std::string, int> family_row{{"middle", run.middle_index},
                                        {"random", run.random_index},
                                        {"zero", run.zero_index}};
  std::map<std::string, EnvParams> family_anchor;
  family_anchor["middle"] = EnvParams{domain.box.midpoint()};

  for (const std::string& method : cfg.methods) {
    if (method == "rarl_maximin" || method == "rarl_regret") {
      RarlConfig rc = cfg.rarl;
      rc.train.seed = mix_seed(trial_seed, hash_bytes(method.data(), method.size()));
      const auto t0 = clock::now();
      RarlResult rr = method == "rarl_maximin" ? rarl_maximin(park, domain.box, rc)
                                               : rarl_regret(park, domain.box, rc);
      runtimes[method] = std::chrono::duration<double>(clock::now() - t0).count();
      family_row[method] = sets.add_policy(rr.protagonist.policy, method);
      family_anchor[method] = rr.adversary_theta;
    }
  }

  // perturbation-trained variants per family (same protocol as the run)
  std::map<std::string, std::vector<int>> family_rows;
  for (const std::string& method : cfg.methods) {
    if (!family_row.count(method)) continue;
    family_rows[method] = {family_row[method]};
    if (cfg.baseline_variants > 0 && family_anchor.count(method)) {
      Rng rng(mix_seed(trial_seed, hash_bytes(method.data(), method.size(), seed_tag::perturb)));
      for (int o = 0; o < cfg.baseline_variants; ++o) {
        const Vec theta_o =
            perturb(family_anchor[method].attractiveness, domain.box, mir.perturb_scale, rng);
        TrainConfig tc = cfg.mirror.agent_train;
        tc.seed = rng();
        auto variant = train_agent(park, ParamsMixture::point(EnvParams{theta_o}), tc);
        family_rows[method].push_back(
            sets.add_policy(variant.policy, method + "_var" + std::to_string(o)));
      }
    }
  }

  // audit thetas (held out from the restricted game)
  std::vector<EnvParams> audit;
  if (cfg.audit_points > 0 && !domain.box.is_point()) {
    Rng rng(mix_seed(trial_seed, 0xA0D17u));
    for (int k = 0; k < cfg.audit_points; ++k) audit.push_back(EnvParams{domain.box.sample(rng)});
  }

  // score every method on the shared augmented table
  sets.complete_table(mir.n_threads);
  std::vector<MethodSpec> specs;
  MixedStrategy mirror_mix = run.final_mixture;
  mirror_mix.probs.resize(static_cast<std::size_t>(sets.n_policies()), 0.0);
  specs.push_back({"mirror", mirror_mix});
  for (const std::string& method : cfg.methods) {
    if (method == "mirror") continue;
    const auto& rows_of = family_rows[method];
    for (std::size_t k = 0; k < rows_of.size(); ++k) {
      const std::string name = k == 0 ? method : method + "#" + std::to_string(k);
      specs.push_back(pure_method(name, rows_of[k], sets.n_policies()));
    }
  }
  const auto t_eval0 = clock::now();
  std::vector<EvalResult> evals = evaluate_max_regret(sets, specs, audit, mir.n_threads);
  const double eval_s = std::chrono::duration<double>(clock::now() - t_eval0).count();

  // report the best variant per family
  std::vector<TrialRow> rows;
  for (const std::string& method : cfg.methods) {
    TrialRow row;
    row.setting = cfg.name;
    row.method = method;
    row.trial = trial;
    bool found = false;
    for (const auto& ev : evals) {
      const bool member =
          ev.method == method || ev.method.rfind(method + "#", 0) == 0;
      if (!member) continue;
      if (!found || ev.max_regret < row.max_regret) {
        row.max_regret = ev.max_regret;
        row.stderr_ = ev.stderr_;
        row.audit_max_regret = ev.audit_max_regret;
        found = true;
      }
    }
    row.runtime_s = (runtimes.count(method) ? runtimes[method] : 0.0) + eval_s;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace greensec
