#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace fbmerr {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Stateless: output is a pure function of (key, counter). Streams are split
/// by placing the stream identifiers in the upper counter words.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Counter operator()(Counter ctr) const {
    Key k = key_;
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, k);
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t(kMul0) * c[0];
    const std::uint64_t p1 = std::uint64_t(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }

  Key key_;
};

/// Substream of Philox keyed by (seed, stream, lane); draws are indexed by a
/// 64-bit counter so replication r is reproducible in any execution order.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint32_t stream, std::uint32_t lane)
      : gen_(seed), stream_(stream), lane_(lane) {}

  /// Uniform in (0, 1], 53-bit resolution.
  double uniform() {
    refill_if_needed();
    const std::uint64_t bits = (std::uint64_t(block_[pos_]) << 32) | block_[pos_ + 1];
    pos_ += 2;
    return (double(bits >> 11) + 1.0) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    return std::min<std::uint64_t>(bound - 1, static_cast<std::uint64_t>(uniform() * double(bound)));
  }

 private:
  void refill_if_needed() {
    if (pos_ < 4) return;
    block_ = gen_({static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32), lane_, stream_});
    ++counter_;
    pos_ = 0;
  }

  Philox4x32 gen_;
  std::uint32_t stream_;
  std::uint32_t lane_;
  std::uint64_t counter_ = 0;
  Philox4x32::Counter block_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fbmerr
