#pragma once

// Counter-based random numbers: Philox4x32-10 keyed by a 64-bit seed plus a
// 64-bit stream id. Every draw is addressed by an absolute index, so parallel
// generation order cannot change the output.

#include <cmath>
#include <cstdint>

#include "hshg/common.hpp"

namespace hshg {

inline constexpr const char* kRngId = "philox4x32-10";

namespace detail {

inline void philox_round(std::uint32_t c[4], const std::uint32_t k[2]) {
  constexpr std::uint64_t M0 = 0xD2511F53ull;
  constexpr std::uint64_t M1 = 0xCD9E8D57ull;
  const std::uint64_t p0 = M0 * c[0];
  const std::uint64_t p1 = M1 * c[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  const std::uint32_t out0 = hi1 ^ c[1] ^ k[0];
  const std::uint32_t out2 = hi0 ^ c[3] ^ k[1];
  c[0] = out0;
  c[1] = lo1;
  c[2] = out2;
  c[3] = lo0;
}

}  // namespace detail

struct PhiloxBlock {
  std::uint32_t w[4];
};

inline PhiloxBlock philox4x32_10(std::uint64_t counter_lo, std::uint64_t counter_hi,
                                 std::uint64_t key) {
  std::uint32_t c[4] = {static_cast<std::uint32_t>(counter_lo),
                        static_cast<std::uint32_t>(counter_lo >> 32),
                        static_cast<std::uint32_t>(counter_hi),
                        static_cast<std::uint32_t>(counter_hi >> 32)};
  std::uint32_t k[2] = {static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
  constexpr std::uint32_t W0 = 0x9E3779B9u;
  constexpr std::uint32_t W1 = 0xBB67AE85u;
  for (int r = 0; r < 10; ++r) {
    detail::philox_round(c, k);
    k[0] += W0;
    k[1] += W1;
  }
  return PhiloxBlock{{c[0], c[1], c[2], c[3]}};
}

// A named substream of a seeded generator. Streams separate independent uses
// (ball counts vs. centers vs. noise planes) without coordination.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t raw64(std::uint64_t index) const {
    const PhiloxBlock b = philox4x32_10(index, stream_, seed_);
    return (static_cast<std::uint64_t>(b.w[0]) << 32) | b.w[1];
  }

  // Uniform in (0,1); never returns 0 or 1, safe under log().
  double uniform(std::uint64_t index) const {
    const std::uint64_t x = raw64(index) >> 11;
    return (static_cast<double>(x) + 0.5) * (1.0 / 9007199254740992.0);
  }

  // Uniform in [lo, hi).
  double uniform(std::uint64_t index, double lo, double hi) const {
    return lo + (hi - lo) * uniform(index);
  }

  // Standard normal via Box-Muller; one draw consumes indices {2i, 2i+1} of a
  // private raw sequence, so normals are also order-free.
  double normal(std::uint64_t index) const {
    const double u1 = uniform(2 * index);
    const double u2 = uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

// Exact Poisson draw by CDF inversion. Means above 500 are split into
// independent parts (a Poisson sum is Poisson), each consuming one uniform at
// consecutive counter indices.
inline std::uint64_t poisson_draw(const CounterRng& rng, double mean, std::uint64_t index_base = 0) {
  if (mean < 0.0) throw InvariantError("poisson_draw: negative mean");
  if (mean == 0.0) return 0;
  const int parts = static_cast<int>(mean / 500.0) + 1;
  const double part_mean = mean / parts;
  std::uint64_t total = 0;
  for (int p = 0; p < parts; ++p) {
    const double u = rng.uniform(index_base + static_cast<std::uint64_t>(p));
    double prob = std::exp(-part_mean);
    double cdf = prob;
    std::uint64_t k = 0;
    const std::uint64_t cap =
        static_cast<std::uint64_t>(part_mean + 20.0 * std::sqrt(part_mean) + 60.0);
    while (u > cdf && k < cap) {
      ++k;
      prob *= part_mean / static_cast<double>(k);
      cdf += prob;
    }
    total += k;
  }
  return total;
}

}  // namespace hshg
