#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ttv {

// Structural misuse of the API: mismatched dims, bad arguments, bad configs.
struct StructuralError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A computation that started out valid went numerically bad (rank collapse,
// non-finite values, too much clamped mass). The CLI maps this to exit 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad or missing configuration input. The CLI maps this to exit 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable stream id from (seed, a, b, c). Used to give every particle /
// iteration / worker its own generator so results do not depend on the
// thread schedule.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a = 0,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = splitmix64(seed ^ 0x243f6a8885a308d3ULL);
  s = splitmix64(s ^ splitmix64(a));
  s = splitmix64(s ^ splitmix64(b));
  s = splitmix64(s ^ splitmix64(c));
  return s;
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}
  double normal() { return normal_(gen_); }
  double uniform() { return uniform_(gen_); }  // [0, 1)
  std::uint64_t bits() { return gen_(); }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Chunked parallel loop. fn(begin, end, thread_index) must only touch
// shard-local state; with nthreads <= 1 it runs inline.
template <class Fn>
void parallel_chunks(std::int64_t count, int nthreads, Fn&& fn) {
  if (count <= 0) return;
  if (nthreads <= 1 || count == 1) {
    fn(std::int64_t{0}, count, 0);
    return;
  }
  int workers = static_cast<int>(std::min<std::int64_t>(nthreads, count));
  std::int64_t chunk = (count + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    std::int64_t lo = t * chunk;
    std::int64_t hi = std::min<std::int64_t>(lo + chunk, count);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi, t] { fn(lo, hi, t); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace ttv
