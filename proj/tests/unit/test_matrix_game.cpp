#include <doctest.h>

#include <filesystem>

#include "greensec/matrix_game.hpp"

using namespace greensec;

namespace {

PayoffMatrix from(std::initializer_list<std::initializer_list<double>> rows) {
  PayoffMatrix m;
  m.entries = Mat(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) m.entries(i, j++) = v;
    ++i;
  }
  return m;
}

Mat random_matrix(Rng& rng, int nr, int nc) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return Mat::NullaryExpr(nr, nc, [&] { return u(rng); });
}

}  // namespace

TEST_SUITE_BEGIN("matrix_game");

TEST_CASE("matching pennies") {
  const auto sol = solve_zero_sum(from({{1, -1}, {-1, 1}}));
  CHECK(sol.value == doctest::Approx(0.0).epsilon(1e-12));
  for (double p : sol.row.probs) CHECK(p == doctest::Approx(0.5));
  for (double p : sol.col.probs) CHECK(p == doctest::Approx(0.5));
}

TEST_CASE("rock paper scissors") {
  const auto sol = solve_zero_sum(from({{0, -1, 1}, {1, 0, -1}, {-1, 1, 0}}));
  CHECK(sol.value == doctest::Approx(0.0).epsilon(1e-12));
  for (double p : sol.row.probs) CHECK(p == doctest::Approx(1.0 / 3.0));
  for (double p : sol.col.probs) CHECK(p == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("dominant row plays pure") {
  const auto sol = solve_zero_sum(from({{2, 2}, {1, 1}}));
  CHECK(sol.value == doctest::Approx(2.0));
  CHECK(sol.row.probs[0] == doctest::Approx(1.0));
}

TEST_CASE("support enumeration agrees with the LP on random games") {
  Rng rng(11);
  std::uniform_int_distribution<int> size(2, 6);
  for (int rep = 0; rep < 60; ++rep) {
    PayoffMatrix m;
    m.entries = random_matrix(rng, size(rng), size(rng));
    const auto lp = solve_zero_sum(m);
    const auto se = solve_support_enumeration(m);
    CHECK(std::abs(lp.value - se.value) < 1e-9);
    CHECK(equilibrium_gap(m, lp) < 1e-9);
    CHECK(equilibrium_gap(m, se) < 1e-7);
  }
}

TEST_CASE("adding a strictly dominated strategy never changes the value") {
  Rng rng(17);
  for (int rep = 0; rep < 40; ++rep) {
    PayoffMatrix m;
    m.entries = random_matrix(rng, 4, 4);
    const double v = solve_zero_sum(m).value;

    PayoffMatrix with_row = m;
    with_row.entries.conservativeResize(5, 4);
    with_row.entries.row(4) = m.entries.colwise().minCoeff().array() - 0.5;
    CHECK(solve_zero_sum(with_row).value == doctest::Approx(v).epsilon(1e-9));

    PayoffMatrix with_col = m;
    with_col.entries.conservativeResize(4, 5);
    with_col.entries.col(4) = m.entries.rowwise().maxCoeff().array() + 0.5;
    CHECK(solve_zero_sum(with_col).value == doctest::Approx(v).epsilon(1e-9));
  }
}

TEST_CASE("value is invariant to strategy reordering") {
  Rng rng(23);
  PayoffMatrix m;
  m.entries = random_matrix(rng, 5, 5);
  const double v = solve_zero_sum(m).value;
  PayoffMatrix shuffled;
  shuffled.entries = m.entries;
  shuffled.entries.row(0).swap(shuffled.entries.row(3));
  shuffled.entries.col(1).swap(shuffled.entries.col(4));
  CHECK(solve_zero_sum(shuffled).value == doctest::Approx(v).epsilon(1e-9));
}

TEST_CASE("best response against a mixed opponent") {
  const PayoffMatrix m = from({{0, 4}, {2, 2}});

  SUBCASE("pure opponent reduces to an argmax") {
    const auto [idx, value] = best_response_value(m, MixedStrategy::point(2, 1), Side::kRow);
    CHECK(idx == 0);
    CHECK(value == doctest::Approx(4.0));
  }
  SUBCASE("uniform opponent; expected values tie at 2, lowest index wins") {
    const auto [idx, value] = best_response_value(m, MixedStrategy::uniform(2), Side::kRow);
    CHECK(value == doctest::Approx(2.0));
    CHECK(idx == 0);
  }
  SUBCASE("column side minimizes") {
    const auto [idx, value] = best_response_value(m, MixedStrategy::uniform(2), Side::kCol);
    CHECK(idx == 0);
    CHECK(value == doctest::Approx(1.0));
  }
  SUBCASE("dimension mismatch is an argument error") {
    CHECK_THROWS_AS(best_response_value(m, MixedStrategy::uniform(3), Side::kRow), ArgumentError);
  }
}

TEST_CASE("best responses against an equilibrium match the value") {
  Rng rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    PayoffMatrix m;
    m.entries = random_matrix(rng, 4, 5);
    const auto sol = solve_zero_sum(m);
    const auto [ri, rv] = best_response_value(m, sol.col, Side::kRow);
    const auto [ci, cv] = best_response_value(m, sol.row, Side::kCol);
    CHECK(rv == doctest::Approx(sol.value).epsilon(1e-9));
    CHECK(cv == doctest::Approx(sol.value).epsilon(1e-9));
  }
}

TEST_CASE("matrix csv round trip") {
  const std::string path = std::filesystem::temp_directory_path() / "greensec_matrix_test.csv";
  Rng rng(41);
  const Mat m = random_matrix(rng, 3, 4);
  write_matrix_csv(path, m);
  CHECK(read_matrix_csv(path) == m);
  std::filesystem::remove(path);
}

TEST_CASE("degenerate inputs are rejected") {
  PayoffMatrix empty;
  empty.entries = Mat(0, 0);
  CHECK_THROWS_AS(solve_zero_sum(empty), ArgumentError);
  PayoffMatrix bad = from({{1.0, 2.0}});
  bad.entries(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(solve_zero_sum(bad), ArgumentError);
}

TEST_SUITE_END();
