#pragma once

// Shared plumbing: version, errors, logging, deterministic parallel loops.

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hshg {

inline constexpr const char* kVersion = "0.3.0";

// ---------------------------------------------------------------------------
// Errors. Exit-code mapping lives in the CLI: ConfigError -> 1,
// MissingArtifactError -> 2, InvariantError -> 3.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error {
  using Error::Error;
};

struct MissingArtifactError : Error {
  using Error::Error;
};

struct InvariantError : Error {
  using Error::Error;
};

// Solver non-convergence carries the residual history for diagnostics.
struct SolveError : Error {
  std::vector<double> residual_history;
  SolveError(const std::string& msg, std::vector<double> history)
      : Error(msg), residual_history(std::move(history)) {}
};

// ---------------------------------------------------------------------------
// Logging. Controlled by the HSHG_LOG environment variable:
// "silent" (default for tools that print data), "info", "debug".
// Always goes to stderr so stdout stays machine-readable.
// ---------------------------------------------------------------------------

enum class LogLevel : int { Silent = 0, Info = 1, Debug = 2 };

inline LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("HSHG_LOG");
    if (!env) return LogLevel::Silent;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    if (std::strcmp(env, "info") == 0) return LogLevel::Info;
    return LogLevel::Silent;
  }();
  return level;
}

template <typename... Args>
void log_info(const char* fmt, Args... args) {
  if (log_level() >= LogLevel::Info) {
    std::fprintf(stderr, "[hshg] ");
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }
}

template <typename... Args>
void log_debug(const char* fmt, Args... args) {
  if (log_level() >= LogLevel::Debug) {
    std::fprintf(stderr, "[hshg:debug] ");
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }
}

// ---------------------------------------------------------------------------
// Deterministic parallelism. Work is split into fixed-size chunks whose
// boundaries do not depend on the worker count; reductions combine per-chunk
// partials in chunk order. Results are therefore bitwise identical for every
// worker count, which is stronger than the reproducibility contract needs.
// ---------------------------------------------------------------------------

class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool;
    return pool;
  }

  void set_workers(int n) {
    std::lock_guard<std::mutex> lk(config_mutex_);
    requested_workers_ = n < 1 ? 1 : n;
  }

  int workers() {
    std::lock_guard<std::mutex> lk(config_mutex_);
    return requested_workers_;
  }

  // fn(chunk_index, begin, end) over [0, n) split into chunks of `grain`.
  void run_chunks(std::int64_t n, std::int64_t grain,
                  const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) return;
    if (grain <= 0) grain = 1;
    const std::int64_t nchunks = (n + grain - 1) / grain;
    int w = workers();
    if (w <= 1 || nchunks == 1) {
      for (std::int64_t c = 0; c < nchunks; ++c)
        fn(c, c * grain, std::min(n, (c + 1) * grain));
      return;
    }
    if (w > static_cast<int>(nchunks)) w = static_cast<int>(nchunks);
    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
      for (;;) {
        std::int64_t c = next.fetch_add(1, std::memory_order_relaxed);
        if (c >= nchunks) return;
        fn(c, c * grain, std::min(n, (c + 1) * grain));
      }
    };
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(w) - 1);
    for (int i = 0; i + 1 < w; ++i) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
  }

 private:
  ThreadPool() {
    unsigned hw = std::thread::hardware_concurrency();
    requested_workers_ = static_cast<int>(hw == 0 ? 1 : (hw > 8 ? 8 : hw));
  }
  std::mutex config_mutex_;
  int requested_workers_ = 1;
};

inline void set_workers(int n) { ThreadPool::instance().set_workers(n); }
inline int worker_count() { return ThreadPool::instance().workers(); }

inline constexpr std::int64_t kParallelGrain = 1 << 14;

template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn) {
  ThreadPool::instance().run_chunks(
      n, kParallelGrain,
      [&fn](std::int64_t, std::int64_t b, std::int64_t e) {
        for (std::int64_t i = b; i < e; ++i) fn(i);
      });
}

// Deterministic sum reduction: per-chunk partials combined in chunk order.
template <typename Fn>
double parallel_sum(std::int64_t n, Fn&& term) {
  if (n <= 0) return 0.0;
  const std::int64_t nchunks = (n + kParallelGrain - 1) / kParallelGrain;
  std::vector<double> partial(static_cast<std::size_t>(nchunks), 0.0);
  ThreadPool::instance().run_chunks(
      n, kParallelGrain,
      [&](std::int64_t c, std::int64_t b, std::int64_t e) {
        double s = 0.0;
        for (std::int64_t i = b; i < e; ++i) s += term(i);
        partial[static_cast<std::size_t>(c)] = s;
      });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

// ---------------------------------------------------------------------------
// FNV-1a 64-bit hash, used for config fingerprints in run records.
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

// Fixed float formatting shared by every writer so reruns are byte-identical.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

}  // namespace hshg
