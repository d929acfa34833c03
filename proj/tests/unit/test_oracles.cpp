#include <doctest.h>

#include <filesystem>

#include "greensec/baselines.hpp"
#include "greensec/diff_rollout.hpp"
#include "greensec/nature_oracle.hpp"
#include "test_helpers.hpp"

using namespace greensec;
using greensec::testing::ConstPolicy;
using greensec::testing::exact_expected_return;

namespace {

ParkInstance strip_park(int n, int horizon, double budget, double alpha = 1.5) {
  ParkInstance p = ParkInstance::make(n, horizon, budget);
  p.initial_wildlife = Vec::Ones(n);
  p.alpha = alpha;
  return p;
}

TrainConfig fast_train(int episodes, std::uint64_t seed) {
  TrainConfig c;
  c.episodes = episodes;
  c.warmup_transitions = 64;
  c.eval_every = std::max(episodes / 5, 1);
  c.eval_episodes = 16;
  c.seed = seed;
  return c;
}

// best return over the 101-point effort grid (exact enumeration oracle)
double grid_best_return(const ParkInstance& park, const EnvParams& theta) {
  REQUIRE(park.n_targets == 2);
  double best = -1e300;
  for (int k = 0; k <= 100; ++k) {
    const double a0 = std::min(1.0, park.budget * k / 100.0);
    const double a1 = std::min(1.0, park.budget - a0);
    ConstPolicy pol((Vec(2) << a0, a1).finished());
    best = std::max(best, exact_expected_return(park, theta, pol));
  }
  return best;
}

}  // namespace

TEST_SUITE_BEGIN("oracles");

TEST_CASE("net policy action contract") {
  ParkInstance park = strip_park(4, 3, 1.5);
  Rng rng(3);
  Mlp actor({9, 16, 32, 4}, rng);
  NetPolicy policy(actor, FeatureSpec::plain(park));

  EnvState s = initial_state(park);
  s.past_effort << 0.3, 0.0, 0.2, 0.1;
  EpisodeContext ctx(0);

  SUBCASE("deterministic and feasible") {
    const Vec a = policy.act(s, ctx);
    const Vec b = policy.act(s, ctx);
    CHECK(a == b);
    CHECK(effort_feasible(park, a));
  }
  SUBCASE("zero budget means zero action") {
    ParkInstance broke = strip_park(4, 3, 0.0);
    NetPolicy p2(actor, FeatureSpec::plain(broke));
    CHECK(p2.act(s, ctx).sum() == 0.0);
  }
  SUBCASE("checkpoint round trip preserves behavior") {
    const std::string path = std::filesystem::temp_directory_path() / "greensec_policy_test.tensors";
    save_policy(policy, path);
    PolicyPtr loaded = load_policy(path);
    CHECK(loaded->param_hash() == policy.param_hash());
    CHECK(loaded->act(s, ctx) == policy.act(s, ctx));
    std::filesystem::remove(path);
  }
  SUBCASE("exploration stays feasible at any noise scale") {
    TrainConfig cfg = fast_train(10, 0);
    Rng init(1);
    DdpgCore core(FeatureSpec::plain(park), cfg, init);
    Rng noise(2);
    for (int rep = 0; rep < 200; ++rep) {
      const Vec a = core.act_explore(s, nullptr, 0.5 * park.budget, noise, park);
      CHECK(effort_feasible(park, a));
    }
  }
}

TEST_CASE("random and zero baselines") {
  ParkInstance park = strip_park(4, 2, 1.0);
  RandomPolicy random(4, 1.0);
  SUBCASE("feasible, reproducible, episode-constant") {
    EpisodeContext ctx(7);
    const Vec a = random.act(initial_state(park), ctx);
    CHECK(effort_feasible(park, a));
    EnvState later = initial_state(park);
    later.timestep = 1;
    CHECK(random.act(later, ctx) == a);  // same draw within the episode
    EpisodeContext ctx2(7);
    CHECK(random.act(initial_state(park), ctx2) == a);  // same seed, same draw
    EpisodeContext ctx3(8);
    CHECK(random.act(initial_state(park), ctx3) != a);
  }
  SUBCASE("zero budget") {
    RandomPolicy broke(4, 0.0);
    EpisodeContext ctx(1);
    CHECK(broke.act(initial_state(park), ctx).sum() == 0.0);
  }
}

TEST_CASE("agent oracle learns the single-target instance") {
  ParkInstance park = strip_park(1, 1, 1.0);
  EnvParams theta{Vec::Zero(1)};
  auto result = train_agent(park, ParamsMixture::point(theta), fast_train(60, 5));
  const double optimum = std::pow(1.0, park.psi);  // full effort kills the attack term
  const double got = exact_expected_return(park, theta, *result.policy);
  CHECK(got >= 0.95 * optimum);
  EpisodeContext ctx(0);
  CHECK(result.policy->act(initial_state(park), ctx)[0] == doctest::Approx(1.0));
}

TEST_CASE("agent oracle concentrates effort on the attackable target") {
  ParkInstance park = strip_park(2, 1, 1.0);
  EnvParams theta{(Vec(2) << 0.0, -100.0).finished()};
  auto result = train_agent(park, ParamsMixture::point(theta), fast_train(2500, 11));
  const double best = grid_best_return(park, theta);
  const double got = exact_expected_return(park, theta, *result.policy);
  CHECK(got >= 0.95 * best);
  EpisodeContext ctx(0);
  CHECK(result.policy->act(initial_state(park), ctx)[0] > 0.85);
}

TEST_CASE("training is bit-reproducible under a fixed seed") {
  ParkInstance park = strip_park(2, 2, 1.0);
  EnvParams theta{(Vec(2) << -0.5, -1.0).finished()};
  auto a = train_agent(park, ParamsMixture::point(theta), fast_train(40, 123));
  auto b = train_agent(park, ParamsMixture::point(theta), fast_train(40, 123));
  CHECK(a.policy->param_hash() == b.policy->param_hash());
  auto c = train_agent(park, ParamsMixture::point(theta), fast_train(40, 124));
  CHECK(a.policy->param_hash() != c.policy->param_hash());
}

TEST_CASE("divergence aborts with the best checkpoint so far") {
  ParkInstance park = strip_park(2, 1, 1.0);
  EnvParams theta{Vec::Zero(2)};
  TrainConfig cfg = fast_train(50, 9);
  cfg.eval_every = 1;
  AgentTrainer trainer(park, ParamsMixture::point(theta), cfg);
  trainer.run_episode();  // records a finite checkpoint
  trainer.core().actor().params()[0] = std::numeric_limits<double>::quiet_NaN();
  trainer.run_episode();
  CHECK(trainer.diverged());
  auto result = trainer.finish();
  CHECK(result.diverged);
  EpisodeContext ctx(0);
  CHECK(result.policy->act(initial_state(park), ctx).allFinite());
}

TEST_CASE("monotone sanity: trained beats zero effort on one target") {
  ParkInstance park = strip_park(1, 2, 1.0);
  EnvParams theta{Vec::Zero(1)};
  auto result = train_agent(park, ParamsMixture::point(theta), fast_train(60, 21));
  ConstPolicy zero(Vec::Zero(1));
  CHECK(exact_expected_return(park, theta, *result.policy) >=
        exact_expected_return(park, theta, zero));
}

TEST_CASE("straight-through rollout replays env_step exactly") {
  ParkInstance park = strip_park(4, 3, 1.0);
  park.beta = -4.0;
  EnvParams theta{(Vec(4) << -0.5, 0.5, -1.0, -2.0).finished()};
  Rng rng(7);
  Mlp actor({9, 16, 32, 4}, rng);
  NetPolicy policy(actor, FeatureSpec::plain(park));

  const std::uint64_t attack_seed = 99, policy_seed = 3;
  const double direct = rollout_return(park, theta, policy, attack_seed, policy_seed);
  const auto st = rollout_theta_grad(park, theta.attractiveness, policy, attack_seed, policy_seed,
                                     false);
  CHECK(st.ret == direct);
}

TEST_CASE("relaxed rollout gradient matches finite differences") {
  ParkInstance park = strip_park(4, 3, 1.0, 0.4);
  park.initial_wildlife = Vec::Constant(4, 2.0);
  park.beta = -3.0;
  UncertaintySet box(Vec::Constant(4, -3.0), Vec::Constant(4, 1.0));
  Rng rng(13);
  Mlp actor({13, 16, 32, 4}, rng);
  NetPolicy alt(actor, FeatureSpec::theta_conditioned(park, box));

  Vec theta0 = (Vec(4) << -0.5, 0.3, -2.0, -1.0).finished();
  auto f = [&](const Vec& th) {
    return rollout_theta_grad(park, th, alt, 5, 6, true).ret;
  };
  const auto got = rollout_theta_grad(park, theta0, alt, 5, 6, true);
  const Vec fd = finite_difference_gradient(f, theta0, 1e-6);
  CHECK(max_relative_error(got.d_theta, fd) < 1e-6);
}

TEST_CASE("theta gradient matches the analytic regret derivative on one target") {
  ParkInstance park = strip_park(1, 1, 0.5, 1.0);
  park.initial_wildlife = Vec::Constant(1, 2.0);
  UncertaintySet box(Vec::Constant(1, -2.0), Vec::Constant(1, 2.0));
  NatureConfig cfg;
  cfg.train = fast_train(10, 31);
  NatureTrainer trainer(park, {std::make_shared<ConstPolicy>(Vec::Constant(1, 0.2))},
                        MixedStrategy::point(1, 0), box, cfg);

  ConstPolicy opponent(Vec::Constant(1, 0.2));
  const Vec g = trainer.theta_gradient(opponent, 77, true);
  // pi-hat plays B (single-target softmax); regret = sigma(theta) * alpha * (a_alt - a_opp)
  const double theta = trainer.theta()[0];
  const double s = logistic(theta);
  const double expect = s * (1.0 - s) * park.alpha * (0.5 - 0.2);
  CHECK(std::abs(g[0] - expect) / std::max(1.0, std::abs(expect)) < 1e-3);
  CHECK(g[0] > 0.0);  // raising attractiveness raises regret against the lazier agent
}

TEST_CASE("wake-sleep schedule emits the exact mode sequence") {
  SUBCASE("kappa = 10") {
    for (int j = 1; j <= 40; ++j) {
      const WakeSleepMode m = wake_sleep_mode(j, 10);
      if (j % 20 == 0) CHECK(m == WakeSleepMode::kBoth);
      else if (j % 10 == 0) CHECK(m == WakeSleepMode::kThetaOnly);
      else CHECK(m == WakeSleepMode::kPolicyOnly);
    }
  }
  SUBCASE("kappa = 1 alternates theta-only and both") {
    CHECK(wake_sleep_mode(1, 1) == WakeSleepMode::kThetaOnly);
    CHECK(wake_sleep_mode(2, 1) == WakeSleepMode::kBoth);
    CHECK(wake_sleep_mode(3, 1) == WakeSleepMode::kThetaOnly);
  }
  SUBCASE("kappa = 3") {
    CHECK(wake_sleep_mode(3, 3) == WakeSleepMode::kThetaOnly);
    CHECK(wake_sleep_mode(6, 3) == WakeSleepMode::kBoth);
    CHECK(wake_sleep_mode(4, 3) == WakeSleepMode::kPolicyOnly);
  }
}

TEST_CASE("frozen parameters are bit-identical across an update") {
  ParkInstance park = strip_park(2, 2, 1.0);
  UncertaintySet box(Vec::Constant(2, -2.0), Vec::Constant(2, 0.0));
  NatureConfig cfg;
  cfg.train = fast_train(40, 41);
  cfg.train.warmup_transitions = 64;
  cfg.kappa = 2;
  NatureTrainer trainer(park, {std::make_shared<ConstPolicy>(Vec::Constant(2, 0.4))},
                        MixedStrategy::point(1, 0), box, cfg);

  // episode 1 (policy only): z frozen
  const Vec z_before = trainer.z();
  trainer.run_episode();
  CHECK(trainer.z() == z_before);

  // episode 2 (theta only): actor and critic frozen
  const Vec actor_before = trainer.core().actor().params();
  const Vec critic_before = trainer.core().critic().params();
  trainer.run_episode();
  CHECK(trainer.core().actor().params() == actor_before);
  CHECK(trainer.core().critic().params() == critic_before);
  CHECK(trainer.z() != z_before);
}

TEST_CASE("theta stays in the box after every update") {
  ParkInstance park = strip_park(2, 2, 1.0);
  UncertaintySet box((Vec(2) << -3.0, -1.0).finished(), (Vec(2) << 0.0, -1.0).finished());
  NatureConfig cfg;
  cfg.train = fast_train(60, 43);
  cfg.kappa = 1;  // theta moves every episode
  NatureTrainer trainer(park, {std::make_shared<ConstPolicy>(Vec::Constant(2, 0.4))},
                        MixedStrategy::point(1, 0), box, cfg);
  for (int e = 0; e < 60; ++e) {
    trainer.run_episode();
    CHECK(box.contains(trainer.theta()));
    CHECK(trainer.theta()[1] == -1.0);  // zero-width coordinate is pinned
  }
}

TEST_CASE("zero-width box returns the point with the policy trained only") {
  ParkInstance park = strip_park(2, 1, 1.0);
  const Vec point = (Vec(2) << -1.5, -0.5).finished();
  UncertaintySet box(point, point);
  NatureConfig cfg;
  cfg.train = fast_train(30, 47);
  auto result = train_nature(park, {std::make_shared<ConstPolicy>(Vec::Constant(2, 0.0))},
                             MixedStrategy::point(1, 0), box, cfg);
  CHECK(result.theta.attractiveness == point);
}

TEST_CASE("regret estimates") {
  ParkInstance park = strip_park(2, 2, 1.0);
  EnvParams theta{(Vec(2) << -0.5, -1.5).finished()};
  auto policy = [&](std::uint64_t seed) {
    Rng rng(seed);
    Mlp actor({5, 16, 32, 2}, rng);
    return std::make_shared<NetPolicy>(actor, FeatureSpec::plain(park));
  };
  auto pi = policy(1);

  SUBCASE("identical policies have identically zero regret") {
    const auto est = regret_estimate(park, theta, *pi, {pi}, MixedStrategy::point(1, 0), 50, 9);
    CHECK(est.mean == 0.0);
    CHECK(est.stderr_ == 0.0);
  }
  SUBCASE("one-point mixture equals the difference of shared-seed estimates") {
    auto alt = policy(2);
    const auto reg = regret_estimate(park, theta, *alt, {pi}, MixedStrategy::point(1, 0), 80, 17);
    const auto ra = estimate_return(park, ParamsMixture::point(theta),
                                    PolicyMixture::point(alt.get()), 80, 17);
    const auto rb = estimate_return(park, ParamsMixture::point(theta),
                                    PolicyMixture::point(pi.get()), 80, 17);
    CHECK(reg.mean == doctest::Approx(ra.mean - rb.mean).epsilon(1e-12));
  }
  SUBCASE("common random numbers shrink the variance") {
    auto alt = policy(1);
    Mlp perturbed = alt->actor();
    Rng noise(5);
    std::normal_distribution<double> g(0.0, 0.05);
    for (int i = 0; i < perturbed.params().size(); ++i) perturbed.params()[i] += g(noise);
    NetPolicy alt_p(perturbed, FeatureSpec::plain(park));

    std::vector<double> crn, indep;
    for (int k = 0; k < 20; ++k) {
      crn.push_back(regret_estimate(park, theta, alt_p, {pi}, MixedStrategy::point(1, 0), 30,
                                    mix_seed(100, static_cast<std::uint64_t>(k)))
                        .mean);
      const auto ra = estimate_return(park, ParamsMixture::point(theta),
                                      PolicyMixture::point(&alt_p), 30,
                                      mix_seed(200, static_cast<std::uint64_t>(k)));
      const auto rb = estimate_return(park, ParamsMixture::point(theta),
                                      PolicyMixture::point(pi.get()), 30,
                                      mix_seed(300, static_cast<std::uint64_t>(k)));
      indep.push_back(ra.mean - rb.mean);
    }
    auto variance = [](const std::vector<double>& xs) {
      const auto ms = mean_stderr(xs);
      return ms.stderr_ * ms.stderr_ * xs.size();
    };
    CHECK(variance(crn) <= variance(indep));
  }
}

TEST_CASE("nature oracle regret is nonnegative when seeded from the agent policy") {
  ParkInstance park = strip_park(2, 2, 1.0);
  UncertaintySet box(Vec::Constant(2, -2.0), Vec::Constant(2, 1.0));
  Rng rng(71);
  Mlp actor({5, 16, 32, 2}, rng);
  auto pi = std::make_shared<NetPolicy>(actor, FeatureSpec::plain(park));
  NatureConfig cfg;
  cfg.train = fast_train(120, 73);
  cfg.kappa = 3;
  auto result = train_nature(park, {pi}, MixedStrategy::point(1, 0), box, cfg);
  CHECK(result.regret.mean >= -3.0 * std::max(result.regret.stderr_, 1e-9));
  CHECK(box.contains(result.theta.attractiveness));
}

TEST_CASE("rarl adversaries move theta the right way") {
  // single target, partial budget: higher attractiveness strictly hurts the
  // defender, so the maximin adversary should push theta to the upper end
  ParkInstance park = strip_park(1, 1, 0.5, 1.0);
  park.initial_wildlife = Vec::Constant(1, 2.0);
  UncertaintySet box(Vec::Constant(1, -2.0), Vec::Constant(1, 2.0));
  RarlConfig cfg;
  cfg.train = fast_train(300, 81);
  cfg.kappa = 5;
  cfg.theta_lr = 0.2;
  auto result = rarl_maximin(park, box, cfg);
  CHECK(result.adversary_theta.attractiveness[0] > 1.0);
  EpisodeContext ctx(0);
  CHECK(effort_feasible(park, result.protagonist.policy->act(initial_state(park), ctx)));
}

TEST_CASE("rarl with a point box reduces to plain training") {
  ParkInstance park = strip_park(2, 1, 1.0);
  const Vec point = (Vec(2) << -1.0, 0.0).finished();
  UncertaintySet box(point, point);
  RarlConfig cfg;
  cfg.train = fast_train(50, 91);
  const auto maximin = rarl_maximin(park, box, cfg);
  const auto regret = rarl_regret(park, box, cfg);
  const auto plain = train_agent(park, ParamsMixture::point(EnvParams{point}), cfg.train);
  CHECK(maximin.protagonist.policy->param_hash() == plain.policy->param_hash());
  CHECK(regret.protagonist.policy->param_hash() == plain.policy->param_hash());
}

TEST_CASE("rarl regret and maximin produce different protagonists") {
  ParkInstance park = strip_park(2, 2, 1.0);
  UncertaintySet box((Vec(2) << -2.0, -3.0).finished(), (Vec(2) << 1.0, 0.0).finished());
  RarlConfig cfg;
  cfg.train = fast_train(120, 95);
  cfg.kappa = 10;
  const auto a = rarl_maximin(park, box, cfg);
  const auto b = rarl_regret(park, box, cfg);
  CHECK(a.protagonist.policy->param_hash() != b.protagonist.policy->param_hash());
}

TEST_SUITE_END();
