#include <doctest.h>

#include "greensec/baselines.hpp"
#include "test_helpers.hpp"

using namespace greensec;
using greensec::testing::ConstPolicy;

namespace {

ParkInstance toy_park() {
  ParkInstance p = ParkInstance::make(4, 3, 1.0);
  p.initial_wildlife = Vec::Constant(4, 1.5);
  p.beta = -5.0;
  p.eta = 0.696;
  return p;
}

MirrorConfig tiny_mirror(std::uint64_t seed, int episodes = 40, int cap = 3) {
  MirrorConfig cfg;
  cfg.seed = seed;
  cfg.epoch_cap = cap;
  cfg.perturbations = 1;
  cfg.eval_episodes = 40;
  cfg.agent_train.episodes = episodes;
  cfg.agent_train.warmup_transitions = 64;
  cfg.agent_train.eval_every = std::max(episodes / 2, 1);
  cfg.agent_train.eval_episodes = 16;
  cfg.nature.train = cfg.agent_train;
  cfg.nature.kappa = 4;
  return cfg;
}

NatureDomain two_point_domain() {
  Vec a = Vec::Constant(4, -8.0), b = Vec::Constant(4, -8.0);
  a[0] = 1.5;  // point A: strong attraction on the first cell
  b[3] = 1.5;  // point B: on the last cell
  return NatureDomain::from_points({EnvParams{a}, EnvParams{b}});
}

}  // namespace

TEST_SUITE_BEGIN("mirror");

TEST_CASE("regret payoffs subtract the column max") {
  SUBCASE("hand example") {
    Mat r(2, 2);
    r << 3, 1, 2, 5;
    const PayoffMatrix p = build_regret_payoffs(r);
    CHECK(p.entries(0, 0) == 0.0);
    CHECK(p.entries(0, 1) == -4.0);
    CHECK(p.entries(1, 0) == -1.0);
    CHECK(p.entries(1, 1) == 0.0);
  }
  SUBCASE("single row is its own best") {
    Mat r(1, 3);
    r << 4, -1, 7;
    CHECK(build_regret_payoffs(r).entries.isZero(0.0));
  }
  SUBCASE("payoffs are never positive and column maxima are exactly zero") {
    Rng rng(5);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    const Mat r = Mat::NullaryExpr(6, 4, [&] { return u(rng); });
    const PayoffMatrix p = build_regret_payoffs(r);
    CHECK(p.entries.maxCoeff() == 0.0);
    for (int j = 0; j < 4; ++j) CHECK(p.entries.col(j).maxCoeff() == 0.0);
  }
}

TEST_CASE("perturbation respects the box") {
  Rng rng(7);
  SUBCASE("zero-width box is the identity") {
    const Vec point = (Vec(3) << -1.0, 0.0, 2.0).finished();
    UncertaintySet box(point, point);
    CHECK(perturb(point, box, 0.3, rng) == point);
  }
  SUBCASE("zero scale is the identity") {
    UncertaintySet box(Vec::Constant(3, -2.0), Vec::Constant(3, 2.0));
    const Vec theta = (Vec(3) << 0.5, -1.0, 1.5).finished();
    CHECK(perturb(theta, box, 0.0, rng) == theta);
  }
  SUBCASE("draws stay inside and match the target spread") {
    // wide box so clipping is rare: sd should be close to scale * width
    UncertaintySet box(Vec::Constant(2, -10.0), Vec::Constant(2, 10.0));
    const Vec center = Vec::Zero(2);
    const double scale = 0.05;  // sd = 1, box half-width 10
    std::vector<double> draws0;
    for (int k = 0; k < 10000; ++k) {
      const Vec p = perturb(center, box, scale, rng);
      CHECK(box.contains(p));
      draws0.push_back(p[0]);
    }
    const auto ms = mean_stderr(draws0);
    const double sd = ms.stderr_ * std::sqrt(10000.0);
    CHECK(sd == doctest::Approx(scale * 20.0).epsilon(0.2));
  }
  SUBCASE("theta outside the box is rejected") {
    UncertaintySet box(Vec::Zero(2), Vec::Ones(2));
    CHECK_THROWS_AS(perturb(Vec::Constant(2, 5.0), box, 0.1, rng), ArgumentError);
  }
}

TEST_CASE("strategy sets dedup and cache") {
  ParkInstance park = toy_park();
  StrategySets sets(park, 99, 30);
  auto a = std::make_shared<ConstPolicy>(Vec::Constant(4, 0.25));
  auto b = std::make_shared<ConstPolicy>(Vec::Constant(4, 0.25));  // same content
  auto c = std::make_shared<ConstPolicy>(Vec::Constant(4, 0.10));
  CHECK(sets.add_policy(a, "a") == 0);
  CHECK(sets.add_policy(b, "b") == 0);  // dedup by parameter hash
  CHECK(sets.add_policy(c, "c") == 1);

  EnvParams t1{Vec::Constant(4, -1.0)};
  CHECK(sets.add_theta(t1) == 0);
  CHECK(sets.add_theta(EnvParams{Vec::Constant(4, -1.0)}) == 0);  // exact-equality dedup
  CHECK(sets.add_theta(EnvParams{Vec::Constant(4, -2.0)}) == 1);

  sets.complete_table(2);
  CHECK(sets.complete());

  // cached cell reuse is bit-exact, including across a fresh instance
  const MeanStderr direct = sets.evaluate_cell(*a, t1);
  CHECK(direct.mean == sets.cell(0, 0).mean);
  StrategySets fresh(park, 99, 30);
  CHECK(fresh.evaluate_cell(*a, t1).mean == direct.mean);

  // a different eval root changes the stream
  StrategySets other(park, 100, 30);
  CHECK(other.evaluate_cell(*a, t1).mean != direct.mean);
}

TEST_CASE("mirror on a point box converges fast and concentrates") {
  ParkInstance park = toy_park();
  const Vec point = Vec::Constant(4, -0.5);
  NatureDomain domain = NatureDomain::from_box(UncertaintySet(point, point));
  MirrorConfig cfg = tiny_mirror(17, 40, 10);
  const MirrorResult res = run_mirror(park, domain, cfg);

  CHECK(res.converged);
  CHECK(res.epochs <= 2);
  CHECK(res.sets->n_thetas() == 1);

  // the returned mixture's reward is within noise of the best row
  const Mat r = res.sets->return_means();
  double mix_ret = 0.0;
  for (int i = 0; i < res.sets->n_policies(); ++i)
    mix_ret += res.final_mixture.probs[static_cast<std::size_t>(i)] * r(i, 0);
  CHECK(mix_ret >= r.col(0).maxCoeff() - 3.0 * res.sets->return_stderrs().maxCoeff() - 1e-9);

  // deltas at the convergence epoch are not significantly negative
  const EpochReport& last = res.reports.back();
  const double tol = 3.0 * res.sets->return_stderrs().maxCoeff() * 2.0;
  CHECK(last.agent_delta >= -tol);
  CHECK(last.nature_delta >= -tol);
}

TEST_CASE("epoch cap semantics") {
  ParkInstance park = toy_park();
  NatureDomain domain = two_point_domain();
  MirrorConfig cfg = tiny_mirror(23, 25, 3);
  cfg.epsilon = -1e9;  // unattainable threshold: the loop must hit the cap
  const MirrorResult res = run_mirror(park, domain, cfg);
  CHECK(!res.converged);
  CHECK(res.epochs == 3);
  CHECK(res.reports.size() == 3);
  CHECK(static_cast<int>(res.final_mixture.probs.size()) == res.sets->n_policies());
}

TEST_CASE("every added theta lies in the domain and policies act feasibly") {
  ParkInstance park = toy_park();
  UncertaintySet box(Vec::Constant(4, -6.0), Vec::Constant(4, 0.0));
  NatureDomain domain = NatureDomain::from_box(box);
  MirrorConfig cfg = tiny_mirror(29, 30, 2);
  const MirrorResult res = run_mirror(park, domain, cfg);

  for (const auto& th : res.sets->thetas()) CHECK(box.contains(th.attractiveness));
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& pol : res.sets->policies()) {
    EnvState s = initial_state(park);
    s.past_effort = project_effort(park, Vec::NullaryExpr(4, [&] { return u(rng); }));
    s.wildlife = Vec::NullaryExpr(4, [&] { return 3.0 * u(rng); });
    s.timestep = 1;
    EpisodeContext ctx(11);
    CHECK(effort_feasible(park, pol->act(s, ctx)));
  }
}

TEST_CASE("mirror beats the seeded baselines on the shared two-point matrix") {
  ParkInstance park = toy_park();
  NatureDomain domain = two_point_domain();
  MirrorConfig cfg = tiny_mirror(31, 60, 4);
  MirrorResult res = run_mirror(park, domain, cfg);
  StrategySets& sets = *res.sets;

  std::vector<MethodSpec> methods;
  MixedStrategy mirror_mix = res.final_mixture;
  mirror_mix.probs.resize(static_cast<std::size_t>(sets.n_policies()), 0.0);
  methods.push_back({"mirror", mirror_mix});
  methods.push_back(pure_method("middle", res.middle_index, sets.n_policies()));
  methods.push_back(pure_method("random", res.random_index, sets.n_policies()));
  auto evals = evaluate_max_regret(sets, methods);

  CHECK(evals[0].max_regret <= evals[1].max_regret + 1e-9);
  CHECK(evals[0].max_regret <= evals[2].max_regret + 1e-9);
  for (const auto& e : evals) CHECK(e.max_regret >= -1e-9);

  // the harness value matches a hand recomputation from the shared r-table
  const Mat r = sets.return_means();
  for (const auto& m : methods) {
    double worst = -1e300;
    for (int j = 0; j < sets.n_thetas(); ++j) {
      double mix_ret = 0.0;
      for (int i = 0; i < sets.n_policies(); ++i)
        mix_ret += m.mixture.probs[static_cast<std::size_t>(i)] * r(i, j);
      worst = std::max(worst, r.col(j).maxCoeff() - mix_ret);
    }
    for (const auto& e : evals)
      if (e.method == m.name) CHECK(e.max_regret == doctest::Approx(worst).epsilon(1e-12));
  }

  // method order does not change the values (shared seeded table)
  std::vector<MethodSpec> reversed(methods.rbegin(), methods.rend());
  auto evals_rev = evaluate_max_regret(sets, reversed);
  for (const auto& e : evals) {
    for (const auto& e2 : evals_rev)
      if (e2.method == e.method) CHECK(e2.max_regret == e.max_regret);
  }

  // a method sitting on the column-max row for every column has zero regret
  StrategySets solo(park, 7, 30);
  solo.add_policy(std::make_shared<ConstPolicy>(Vec::Constant(4, 0.25)), "a");
  solo.add_policy(std::make_shared<ConstPolicy>(Vec::Zero(4)), "b");
  solo.add_theta(domain.points[0]);
  solo.complete_table();
  const Mat sr = solo.return_means();
  const int best_row = sr(0, 0) >= sr(1, 0) ? 0 : 1;
  auto solo_eval = evaluate_max_regret(solo, {pure_method("best", best_row, 2)});
  CHECK(solo_eval[0].max_regret == 0.0);
}

TEST_CASE("restricted game value drifts in nature's favor") {
  ParkInstance park = toy_park();
  NatureDomain domain = two_point_domain();
  MirrorConfig cfg = tiny_mirror(37, 40, 4);
  cfg.epsilon = -1e9;
  const MirrorResult res = run_mirror(park, domain, cfg);
  const double tol = 6.0 * res.sets->return_stderrs().maxCoeff() + 1e-9;
  for (std::size_t e = 1; e < res.reports.size(); ++e)
    CHECK(res.reports[e].game_value <= res.reports[e - 1].game_value + tol);
}

TEST_CASE("middle baseline trains at the midpoint") {
  ParkInstance park = toy_park();
  const Vec point = Vec::Constant(4, -1.25);
  NatureDomain domain = NatureDomain::from_box(UncertaintySet(point, point));
  TrainConfig cfg;
  cfg.episodes = 30;
  cfg.warmup_transitions = 64;
  cfg.eval_every = 15;
  cfg.eval_episodes = 8;
  cfg.seed = 71;
  const auto mid = middle_baseline(park, domain, cfg);
  const auto plain = train_agent(park, ParamsMixture::point(EnvParams{point}), cfg);
  CHECK(mid.policy->param_hash() == plain.policy->param_hash());

  // symmetric box trains at zero
  NatureDomain sym = NatureDomain::from_box(
      UncertaintySet(Vec::Constant(4, -1.0), Vec::Constant(4, 1.0)));
  const auto mid_sym = middle_baseline(park, sym, cfg);
  const auto plain_zero = train_agent(park, ParamsMixture::point(EnvParams{Vec::Zero(4)}), cfg);
  CHECK(mid_sym.policy->param_hash() == plain_zero.policy->param_hash());
}

TEST_SUITE_END();
