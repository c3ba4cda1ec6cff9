#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace parisian {

// Every path index owns an independent engine seeded from (seed, index), so
// results never depend on how paths are spread over workers.
using PathRng = std::mt19937_64;
using NormalDist = boost::random::normal_distribution<double>;
using ExponentialDist = boost::random::exponential_distribution<double>;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ull));
}

inline PathRng path_rng(std::uint64_t seed, std::uint64_t index) {
  return PathRng(stream_seed(seed, index));
}

/// Seed for a statistically independent rerun (e.g. the step-halving pass).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag * 0xD1B54A32D192ED03ull + 1));
}

/// Uniform on the open interval (0,1).
inline double open_uniform(PathRng& rng) {
  double v;
  do {
    v = std::generate_canonical<double, 53>(rng);
  } while (v <= 0.0);
  return v;
}

inline std::size_t default_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

struct ParallelOptions {
  std::size_t workers = 0;  ///< 0 = available cores
  std::size_t chunk = 4096;
};

/// Runs `work(i)` for i in [0,n). `make_worker()` is called once per thread and
/// must return a callable holding that thread's scratch state. Outputs must be
/// written to per-index slots; the caller reduces them in index order.
template <class MakeWorker>
void for_each_index(std::size_t n, const ParallelOptions& opts, MakeWorker&& make_worker) {
  const std::size_t chunk = std::max<std::size_t>(1, opts.chunk);
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  std::size_t workers = opts.workers == 0 ? default_workers() : opts.workers;
  workers = std::max<std::size_t>(1, std::min(workers, n_chunks));

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::atomic<bool> failed{false};

  auto body = [&] {
    try {
      auto work = make_worker();
      for (;;) {
        if (failed.load(std::memory_order_relaxed)) return;
        const std::size_t c = next.fetch_add(1);
        if (c >= n_chunks) return;
        const std::size_t lo = c * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) work(i);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      failed = true;
    }
  };

  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace parisian
