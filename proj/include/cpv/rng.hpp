#pragma once
#include <cstdint>
#include <cmath>

namespace cpv {

/// pcg32 (PCG-XSH-RR 64/32, O'Neill). Chosen for two properties the
/// simulator needs: 2^63 independent streams selected by `stream`, so every
/// pixel gets its own substream derived from (seed, pixel index), and an
/// O(log n) advance() so the draw for any (pixel, frame) pair can be
/// addressed directly. Serial and parallel generation therefore produce
/// identical tensors. Output metadata records the algorithm name "pcg32".
class Pcg32 {
 public:
  Pcg32() : Pcg32(0x853c49e6748fea9bULL, 0xda3e39cb94b95bdbULL) {}

  Pcg32(uint64_t seed, uint64_t stream) {
    inc_ = (stream << 1u) | 1u;
    state_ = 0u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  uint32_t next_u32() {
    const uint64_t old = state_;
    state_ = old * kMult + inc_;
    const auto xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  uint64_t next_u64() {
    const uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform in [0,1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Exponential with the given rate; rate must be > 0.
  double next_exponential(double rate) {
    // 1-u is in (0,1], so the log argument never hits zero.
    return -std::log1p(-next_double()) / rate;
  }

  /// Uniform integer in [lo, hi], inclusive. Rejection sampled (consumes a
  /// variable number of outputs); do not mix with advance()-addressed draws.
  int64_t next_int(int64_t lo, int64_t hi) {
    const auto range = static_cast<uint64_t>(hi - lo) + 1u;
    const uint64_t threshold = (0u - range) % range;
    for (;;) {
      const uint64_t r = next_u64();
      if (r >= threshold) return lo + static_cast<int64_t>(r % range);
    }
  }

  /// Pick one of n buckets from a single output (fixed consumption).
  uint32_t next_bucket(uint32_t n) {
    return static_cast<uint32_t>((static_cast<uint64_t>(next_u32()) * n) >> 32);
  }

  /// Jump the sequence forward by `delta` steps in O(log delta).
  void advance(uint64_t delta) {
    uint64_t acc_mult = 1u, acc_plus = 0u;
    uint64_t cur_mult = kMult, cur_plus = inc_;
    while (delta > 0) {
      if (delta & 1u) {
        acc_mult *= cur_mult;
        acc_plus = acc_plus * cur_mult + cur_plus;
      }
      cur_plus = (cur_mult + 1u) * cur_plus;
      cur_mult *= cur_mult;
      delta >>= 1u;
    }
    state_ = acc_mult * state_ + acc_plus;
  }

  static constexpr const char* algorithm_name() { return "pcg32"; }

 private:
  static constexpr uint64_t kMult = 6364136223846793005ULL;
  uint64_t state_ = 0;
  uint64_t inc_ = 1;
};

}  // namespace cpv
