#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace hwall {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// Stateless: output depends only on (counter, key).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

/// Stream purposes. Each occupies its own slice of the counter space so two
/// consumers sharing a seed never see correlated draws.
enum class StreamTag : std::uint32_t {
  wall = 1,
  heat_bath = 2,
  exact = 3,
  walker = 4,
  tilted = 5,
  test = 100,
};

/// Standard normal quantile, accurate to a few ulp on (0, 1).
double normal_quantile(double p);
/// Upper tail 1 - Phi(x), accurate for large x.
double normal_upper_tail(double x);
/// Phi(x).
double normal_cdf(double x);

/// A short-lived generator addressing a single counter-based stream
/// (seed, tag, a, b). Successive draws walk the fourth counter word, so the
/// output is a pure function of its constructor arguments and draw order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, StreamTag tag, std::uint32_t a, std::uint32_t b)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        a_(a),
        b_(b),
        tag_(static_cast<std::uint32_t>(tag)) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    const std::uint64_t bits = ((hi << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  /// Integer uniform on [0, n) for small n (multiply-shift, bias < n / 2^32).
  std::uint32_t below(std::uint32_t n) {
    return static_cast<std::uint32_t>((std::uint64_t{next_u32()} * n) >> 32);
  }

  double normal() { return normal_quantile(uniform()); }

  double exponential() { return -std::log(uniform()); }

 private:
  void refill() {
    buf_ = philox4x32({a_, b_, tag_, block_++}, key_);
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t a_, b_, tag_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

/// Draws Z ~ N(0,1) conditioned on Z >= lower. lower = -inf is the
/// unconstrained draw and consumes the same randomness as any bulk draw.
/// Inverse CDF for lower <= 4, exponential-proposal rejection above.
/// Throws NumericalError when lower is NaN or +inf.
double truncated_standard_normal(double lower, CounterRng& rng);

/// First two moments of N(0,1) truncated to [lower, inf).
struct TruncatedMoments {
  double mean;
  double variance;
};
TruncatedMoments truncated_normal_moments(double lower);

}  // namespace hwall
