#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "greensec/csv.hpp"
#include "test_helpers.hpp"

using namespace greensec;
using greensec::testing::ConstPolicy;

namespace {

ParkInstance toy_park(int n, int horizon, double budget) {
  ParkInstance p = ParkInstance::make(n, horizon, budget);
  p.initial_wildlife = Vec::Constant(n, 1.5);
  return p;
}

EnvParams const_theta(int n, double v) { return EnvParams{Vec::Constant(n, v)}; }

}  // namespace

TEST_SUITE_BEGIN("park");

TEST_CASE("neighbor windows on the grid") {
  ParkInstance park = toy_park(25, 5, 5.0);
  SUBCASE("center cell, 3x3") {
    CHECK(park.neighbors(12) == std::vector<int>{6, 7, 8, 11, 13, 16, 17, 18});
  }
  SUBCASE("corner cell clips at the boundary") {
    CHECK(park.neighbors(0) == std::vector<int>{1, 5, 6});
  }
  SUBCASE("degenerate 1x1 window") {
    ParkInstance lonely = toy_park(25, 5, 5.0);
    lonely.neighbor_window = 1;
    for (int i = 0; i < 25; ++i) CHECK(lonely.neighbors(i).empty());
  }
  SUBCASE("out of range throws") {
    CHECK_THROWS_AS(park.neighbors(25), ArgumentError);
    CHECK_THROWS_AS(park.neighbors(-1), ArgumentError);
  }
  SUBCASE("non-square target counts fall back to a strip") {
    ParkInstance strip = ParkInstance::make(2, 1, 1.0);
    CHECK(strip.rows == 1);
    CHECK(strip.cols == 2);
    CHECK(strip.neighbors(0) == std::vector<int>{1});
  }
}

TEST_CASE("validation names offending fields") {
  ParkInstance park = toy_park(25, 5, 5.0);
  park.beta = 0.5;
  CHECK_THROWS_WITH_AS(park.validate(), "park.beta: must be < 0", ArgumentError);
  park.beta = -5.0;
  park.budget = 26.0;
  CHECK_THROWS_WITH_AS(park.validate(), "park.budget: must satisfy 0 <= budget <= n_targets",
                       ArgumentError);
}

TEST_CASE("attack probability matches scalar logistic evaluations") {
  ParkInstance park = toy_park(25, 5, 5.0);
  EnvState s = initial_state(park);

  SUBCASE("all zero inputs give one half") {
    CHECK(attack_probability(park, const_theta(25, 0.0), s, 12) == doctest::Approx(0.5));
  }
  SUBCASE("field-data coefficients, no effort") {
    park.beta = -0.098;
    park.eta = 0.696;
    const double expect = 1.0 / (1.0 + std::exp(10.633));  // independent scalar route
    CHECK(attack_probability(park, const_theta(25, -10.633), s, 12) ==
          doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(2.41e-5).epsilon(2e-2));
  }
  SUBCASE("deterrence through own past effort") {
    park.beta = -5.0;
    s.past_effort[12] = 1.0;
    const double expect = 1.0 / (1.0 + std::exp(5.0));
    CHECK(attack_probability(park, const_theta(25, 0.0), s, 12) ==
          doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(6.69e-3).epsilon(2e-2));
  }
}

TEST_CASE("wildlife response") {
  ParkInstance park = toy_park(25, 5, 5.0);
  CHECK(wildlife_step(park, 0.0, 1, 0.0) == 0.0);
  CHECK(wildlife_step(park, 2.0, 0, 0.3) == std::pow(2.0, park.psi));
  CHECK(wildlife_step(park, 2.0, 1, 1.0) == std::pow(2.0, park.psi));
  CHECK(wildlife_step(park, 0.5, 1, 0.0) == 0.0);  // kill exceeds the stock
}

TEST_CASE("env_step contract") {
  ParkInstance park = toy_park(4, 3, 1.0);
  EnvParams theta = const_theta(4, -1.0);
  EnvState s = initial_state(park);
  Vec action = Vec::Constant(4, 0.25);

  SUBCASE("non-terminal steps pay zero") {
    Rng rng(7);
    auto [s1, r1] = env_step(park, theta, s, action, rng);
    CHECK(r1 == 0.0);
    auto [s2, r2] = env_step(park, theta, s1, action, rng);
    CHECK(r2 == 0.0);
    auto [s3, r3] = env_step(park, theta, s2, action, rng);
    CHECK(r3 == s3.wildlife.sum());
    CHECK(s3.timestep == 3);
    CHECK_THROWS_AS(env_step(park, theta, s3, action, rng), UsageError);
  }
  SUBCASE("same seed, same transition, bit for bit") {
    Rng rng_a(123), rng_b(123);
    auto [sa, ra] = env_step(park, theta, s, action, rng_a);
    auto [sb, rb] = env_step(park, theta, s, action, rng_b);
    CHECK(sa.wildlife == sb.wildlife);
    CHECK(ra == rb);
  }
  SUBCASE("attack-free horizon gives the closed-form sum") {
    ParkInstance safe = toy_park(9, 1, 3.0);
    safe.psi = 1.02;
    safe.initial_wildlife = Vec::Ones(9);
    EnvParams never = const_theta(9, -100.0);
    for (int i = 0; i < 9; ++i)
      CHECK(attack_probability(safe, never, initial_state(safe), i) < 1e-40);
    Rng rng(5);
    auto [s1, r] = env_step(safe, never, initial_state(safe), Vec::Zero(9), rng);
    CHECK(r == doctest::Approx(9.0));
  }
}

TEST_CASE("simulator properties hold on randomized cases") {
  Rng rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 1 + static_cast<int>(u(rng) * 9);
    ParkInstance park = ParkInstance::make(n, 1 + static_cast<int>(u(rng) * 4),
                                           u(rng) * n);
    park.beta = -0.1 - 5.0 * u(rng);
    park.eta = 0.05 + 2.0 * u(rng);
    park.psi = 1.01 + 0.2 * u(rng);
    park.alpha = 0.2 + 2.0 * u(rng);
    park.initial_wildlife = Vec::NullaryExpr(n, [&] { return 3.0 * u(rng); });
    EnvParams theta{Vec::NullaryExpr(n, [&] { return -8.0 + 10.0 * u(rng); })};

    EnvState s = initial_state(park);
    s.past_effort = project_effort(park, Vec::NullaryExpr(n, [&] { return u(rng); }));
    s.wildlife = Vec::NullaryExpr(n, [&] { return 3.0 * u(rng); });
    const int i = static_cast<int>(u(rng) * n);

    const double p = attack_probability(park, theta, s, i);
    CHECK(p > 0.0);
    CHECK(p < 1.0);

    // deterrence: more past effort at i strictly lowers the probability
    EnvState more = s;
    more.past_effort[i] = std::min(1.0, s.past_effort[i] + 0.25);
    if (more.past_effort[i] > s.past_effort[i])
      CHECK(attack_probability(park, theta, more, i) < p);

    // displacement: more past effort at a neighbor strictly raises it
    if (!park.neighbors(i).empty()) {
      const int j = park.neighbors(i)[0];
      EnvState shifted = s;
      shifted.past_effort[j] = std::min(1.0, s.past_effort[j] + 0.25);
      if (shifted.past_effort[j] > s.past_effort[j])
        CHECK(attack_probability(park, theta, shifted, i) > p);
    }

    // stepping preserves wildlife nonnegativity
    Rng step_rng(rep);
    auto [next, reward] = env_step(park, theta, s, s.past_effort, step_rng);
    CHECK((next.wildlife.array() >= 0.0).all());
  }
}

TEST_CASE("zero attacks grow wildlife by repeated exponentiation exactly") {
  ParkInstance park = toy_park(4, 3, 0.0);
  park.initial_wildlife << 0.5, 1.0, 1.7, 2.4;
  EnvParams never = const_theta(4, -100.0);
  ConstPolicy zero(Vec::Zero(4));
  Rng rng(1);
  EnvState s = initial_state(park);
  for (int t = 0; t < park.horizon; ++t) s = env_step(park, never, s, Vec::Zero(4), rng).first;
  for (int i = 0; i < 4; ++i) {
    double w = park.initial_wildlife[i];
    for (int t = 0; t < park.horizon; ++t) w = std::pow(w, park.psi);
    CHECK(s.wildlife[i] == w);  // bitwise, same pow sequence
  }
}

TEST_CASE("estimate_return basics") {
  ParkInstance park = toy_park(4, 2, 1.0);
  EnvParams theta = const_theta(4, -1.0);
  ConstPolicy quarter(Vec::Constant(4, 0.25));

  SUBCASE("empty mixtures are rejected") {
    ParamsMixture empty;
    CHECK_THROWS_AS(
        estimate_return(park, empty, PolicyMixture::point(&quarter), 10, 1), ArgumentError);
  }
  SUBCASE("no poaching means deterministic rollouts") {
    const auto est = estimate_return(park, ParamsMixture::point(const_theta(4, -100.0)),
                                     PolicyMixture::point(&quarter), 50, 99);
    CHECK(est.stderr_ <= 1e-12 * std::abs(est.mean));  // identical rollouts, mean roundoff only
    double expect = 0.0;
    for (int i = 0; i < 4; ++i) expect += std::pow(std::pow(1.5, park.psi), park.psi);
    CHECK(est.mean == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("same seed reproduces the estimate bit-exactly") {
    const auto a = estimate_return(park, ParamsMixture::point(theta),
                                   PolicyMixture::point(&quarter), 200, 42);
    const auto b = estimate_return(park, ParamsMixture::point(theta),
                                   PolicyMixture::point(&quarter), 200, 42);
    CHECK(a.mean == b.mean);
    CHECK(a.stderr_ == b.stderr_);
  }
  SUBCASE("threaded evaluation matches single-threaded bit-exactly") {
    const auto a = estimate_return(park, ParamsMixture::point(theta),
                                   PolicyMixture::point(&quarter), 500, 42, 1);
    const auto b = estimate_return(park, ParamsMixture::point(theta),
                                   PolicyMixture::point(&quarter), 500, 42, 4);
    CHECK(a.mean == b.mean);
  }
}

TEST_CASE("Monte Carlo agrees with exhaustive enumeration") {
  ParkInstance park = ParkInstance::make(3, 2, 1.5);
  park.initial_wildlife = Vec::Constant(3, 1.2);
  park.beta = -3.0;
  park.eta = 0.5;
  EnvParams theta{(Vec(3) << -0.5, -1.5, 0.5).finished()};
  ConstPolicy policy((Vec(3) << 0.6, 0.3, 0.6).finished());

  const double exact = greensec::testing::exact_expected_return(park, theta, policy);
  const auto est = estimate_return(park, ParamsMixture::point(theta),
                                   PolicyMixture::point(&policy), 50000, 7);
  CHECK(std::abs(est.mean - exact) <= 3.0 * est.stderr_);
}

TEST_CASE("effort projection enforces feasibility") {
  ParkInstance park = toy_park(4, 2, 1.0);
  Rng rng(5);
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  for (int rep = 0; rep < 300; ++rep) {
    Vec raw = Vec::NullaryExpr(4, [&] { return u(rng); });
    CHECK(effort_feasible(park, project_effort(park, raw)));
  }
}

TEST_CASE("uncertainty boxes") {
  UncertaintySet box((Vec(2) << -2.0, -1.0).finished(), (Vec(2) << 0.0, -1.0).finished());
  CHECK(!box.is_point());
  CHECK(box.midpoint()[0] == doctest::Approx(-1.0));
  Rng rng(3);
  for (int rep = 0; rep < 100; ++rep) CHECK(box.contains(box.sample(rng)));
  CHECK(box.clip((Vec(2) << 5.0, 5.0).finished())[0] == 0.0);
  CHECK_THROWS_AS(UncertaintySet((Vec(1) << 1.0).finished(), (Vec(1) << 0.0).finished()),
                  ArgumentError);

  SUBCASE("experiment boxes honor interval size and center range") {
    Rng rng2(9);
    const auto b = make_experiment_box(50, 3.0, rng2);
    for (int i = 0; i < 50; ++i) {
      CHECK(b.upper[i] - b.lower[i] == doctest::Approx(3.0));
      const double c = 0.5 * (b.upper[i] + b.lower[i]);
      CHECK(c <= 0.0);
      CHECK(c >= -10.0);
    }
  }
}

TEST_CASE("vector csv round trip and errors") {
  const std::string path = std::filesystem::temp_directory_path() / "greensec_vec_test.csv";
  Vec v = (Vec(3) << 0.25, -1.5, 3.25).finished();
  write_vector_csv(path, v);
  CHECK(read_vector_csv(path) == v);
  CHECK_THROWS_AS(read_vector_csv(path, 5), ArgumentError);

  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("target_index,value\n0,1.0\n1\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_WITH_AS(read_vector_csv(path),
                       (path + ":3: expected 2 fields, got 1").c_str(), ArgumentError);
  std::filesystem::remove(path);
}

TEST_SUITE_END();
