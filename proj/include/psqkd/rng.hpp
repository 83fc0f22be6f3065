#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>

namespace psqkd::rng {

// Philox4x32-10 counter-based generator.  A (key, counter) pair maps to 128
// independent bits through 10 rounds of multiply-hi/lo mixing, so any worker
// can produce the value for symbol i without touching shared state: streams
// are indexed, not advanced.  Distinct keys or counters never collide.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t(kMul0) * ctr[0];
    const std::uint64_t p1 = std::uint64_t(kMul1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
           static_cast<std::uint32_t>(p0)};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

// One purpose-tagged random stream under a run seed.  The seed occupies the
// key; the purpose tag and the symbol index occupy the counter, so e.g. the
// encoding draw and the channel-noise draw for the same symbol come from
// provably disjoint counters.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint32_t purpose)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        purpose_(purpose) {}

  std::array<std::uint32_t, 4> bits(std::uint64_t index) const {
    return philox4x32({static_cast<std::uint32_t>(index),
                       static_cast<std::uint32_t>(index >> 32), purpose_, 0u},
                      key_);
  }

  // Uniform double in [0, 1) from the top 53 bits of one 64-bit word.
  double uniform(std::uint64_t index) const {
    return to_unit(word64(bits(index), 0));
  }

  // Two independent standard normals for symbol `index` (Box-Muller over the
  // block's two 64-bit words).
  std::pair<double, double> normal_pair(std::uint64_t index) const {
    const auto b = bits(index);
    const double u1 = to_unit(word64(b, 0));
    const double u2 = to_unit(word64(b, 1));
    // 1-u1 lies in (0,1], keeping the log finite.
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  // Uniform integer in [0, bound).  Plain modulo: the bias is bound/2^64,
  // far below anything observable here.
  std::uint64_t uniform_below(std::uint64_t index, std::uint64_t bound) const {
    return word64(bits(index), 0) % bound;
  }

 private:
  static std::uint64_t word64(const std::array<std::uint32_t, 4>& b, int slot) {
    return (std::uint64_t(b[2 * slot + 1]) << 32) | b[2 * slot];
  }

  static double to_unit(std::uint64_t w) {
    return static_cast<double>(w >> 11) * 0x1.0p-53;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t purpose_;
};

}  // namespace psqkd::rng
