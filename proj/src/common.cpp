#include "greensec/common.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <mutex>
#include <thread>

namespace greensec {

std::uint64_t hash_bytes(const void* data, std::size_t n, std::uint64_t seed) {
  // FNV-1a over bytes, then a splitmix finalizer.
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ull ^ seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return splitmix64(h);
}

std::uint64_t hash_vec(const Vec& v, std::uint64_t seed) {
  return hash_bytes(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double), seed);
}

MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr out;
  out.n = static_cast<int>(xs.size());
  if (xs.empty()) return out;
  double s = 0.0;
  for (double x : xs) s += x;
  out.mean = s / out.n;
  if (out.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += sq(x - out.mean);
    out.stderr_ = std::sqrt(ss / (out.n - 1.0) / out.n);
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  // %.17g round-trips doubles; trim to shorter forms when exact.
  for (int prec : {6, 9, 12, 15, 17}) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void parallel_for(int n, int n_threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (n_threads <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min(n_threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr err;
  std::mutex err_mu;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace greensec
