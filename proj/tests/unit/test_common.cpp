#include <doctest.h>

#include <set>

#include "greensec/common.hpp"

using namespace greensec;

TEST_SUITE_BEGIN("common");

TEST_CASE("seed derivation is deterministic and spreads") {
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  std::set<std::uint64_t> seen;
  for (std::uint64_t root = 0; root < 10; ++root)
    for (std::uint64_t i = 0; i < 100; ++i) seen.insert(mix_seed(root, i));
  CHECK(seen.size() == 1000);  // no collisions across a small grid
}

TEST_CASE("hash_vec keys on content") {
  Vec a(3), b(3);
  a << 1.0, 2.0, 3.0;
  b << 1.0, 2.0, 3.0;
  CHECK(hash_vec(a) == hash_vec(b));
  b[2] = 3.0000001;
  CHECK(hash_vec(a) != hash_vec(b));
}

TEST_CASE("mean_stderr matches a hand computation") {
  const auto ms = mean_stderr({1.0, 2.0, 3.0, 4.0});
  CHECK(ms.mean == doctest::Approx(2.5));
  // sample sd = sqrt(5/3), stderr = sd / 2
  CHECK(ms.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(ms.n == 4);
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-17, 123456.789, -2.5e300}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("parallel_for is order-deterministic via indexed writes") {
  std::vector<double> a(1000), b(1000);
  parallel_for(1000, 1, [&](int i) { a[static_cast<std::size_t>(i)] = std::sqrt(i + 1.0); });
  parallel_for(1000, 4, [&](int i) { b[static_cast<std::size_t>(i)] = std::sqrt(i + 1.0); });
  CHECK(a == b);
}

TEST_SUITE_END();
