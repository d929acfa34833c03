#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace greensec {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// Thrown on bad user input (config fields, CSV schemas, argument errors).
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
// Thrown on misuse of an API contract (e.g. stepping a terminal state).
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};
// Thrown when a numerical routine cannot produce a valid result.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- deterministic seed derivation ---
//
// All randomness in the toolkit flows from a root seed through splitmix64
// mixing: root -> trial -> epoch -> episode.  Derived streams are stable
// across serial and parallel execution, so sharding work by index never
// changes results.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (splitmix64(b) + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

// Tag constants keep independent streams (attack draws, policy draws,
// exploration, ...) from colliding when derived from the same parent seed.
namespace seed_tag {
constexpr std::uint64_t attack = 0xA77Au;
constexpr std::uint64_t policy = 0x70Cu;
constexpr std::uint64_t mixture = 0x313Du;
constexpr std::uint64_t train = 0x7247u;
constexpr std::uint64_t eval = 0xE7A1u;
constexpr std::uint64_t perturb = 0x9E27u;
}  // namespace seed_tag

std::uint64_t hash_bytes(const void* data, std::size_t n, std::uint64_t seed = 0);
std::uint64_t hash_vec(const Vec& v, std::uint64_t seed = 0);

// --- misc helpers ---

inline double logistic(double x) {
  // stable on both tails
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double sq(double x) { return x * x; }

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
  int n = 0;
};

// Fixed-order mean/stderr over per-index samples (deterministic reduction).
MeanStderr mean_stderr(const std::vector<double>& xs);

std::string format_double(double v);  // shortest round-trippable, for CSV output

// Runs fn(i) for i in [0, n) on up to n_threads workers.  Work is split by
// index so results written to pre-sized buffers are deterministic.
void parallel_for(int n, int n_threads, const std::function<void(int)>& fn);

}  // namespace greensec
