#pragma once

// Counter-based random number streams (Philox4x64-10, Salmon et al. SC'11).
// A stream is identified by (seed, stream id); draws are a pure function of
// that identity plus a block counter, so replicated runs are reproducible
// across platforms and streams can be handed to threads without locking.

#include <array>
#include <cmath>
#include <cstdint>

namespace dynwalk {

namespace detail {

inline constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ULL;
inline constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ULL;
inline constexpr std::uint64_t kPhiloxW0 = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kPhiloxW1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  __uint128_t p = static_cast<__uint128_t>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}

  RngStream(std::uint64_t seed, std::uint64_t stream)
      : key_{seed, 0}, counter_{0, stream, 0, 0} {}

  // Derives an independent child stream; distinct tags give distinct streams.
  RngStream split(std::uint64_t tag) const {
    RngStream child = *this;
    child.counter_[0] = 0;
    child.counter_[2] = detail::splitmix64(counter_[2] ^ (tag + 0x632BE59BD9B4E019ULL));
    child.counter_[3] = detail::splitmix64(counter_[3] + counter_[0] + 1);
    child.idx_ = 4;
    return child;
  }

  std::uint64_t next_u64() {
    if (idx_ >= 4) refill();
    return buf_[idx_++];
  }

  // Uniform in [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Exponential with the given rate; strictly positive.
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  // Uniform integer in [0, n), n >= 1. Rejection keeps it unbiased.
  std::uint64_t uniform_below(std::uint64_t n) {
    std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  void refill() {
    // The counter advances before encryption, matching the reference
    // implementations this generator is validated against.
    if (++counter_[0] == 0 && ++counter_[1] == 0 && ++counter_[2] == 0) ++counter_[3];
    std::array<std::uint64_t, 4> ctr = counter_;
    std::array<std::uint64_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      std::uint64_t hi0, lo0, hi1, lo1;
      detail::mulhilo(detail::kPhiloxM0, ctr[0], hi0, lo0);
      detail::mulhilo(detail::kPhiloxM1, ctr[2], hi1, lo1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += detail::kPhiloxW0;
      key[1] += detail::kPhiloxW1;
    }
    buf_ = ctr;
    idx_ = 0;
  }

  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_;
  std::array<std::uint64_t, 4> buf_{};
  int idx_ = 4;
};

}  // namespace dynwalk
