#pragma once

#include <cstdint>

namespace covlaw {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer (Stafford variant 13). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of replica `index` under a master seed.
constexpr std::uint64_t replica_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master ^ ((index + 1) * kGoldenGamma));
}

/// Counter-based generator: the k-th output is mix64(key + k * golden gamma).
///
/// The stream is a pure function of (key, counter), so any position can be
/// reached in O(1) and substreams are obtained by deriving new keys with
/// `substream`. Real-valued variates use only IEEE-exact operations plus
/// std::log / std::sqrt, which is what the cross-run determinism contract
/// relies on.
class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {}

  /// Independent stream for column / chain / replica `index` under `seed`.
  static Stream substream(std::uint64_t seed, std::uint64_t index) {
    return Stream(mix64(seed + mix64(index + kGoldenGamma)));
  }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGoldenGamma); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via the Marsaglia polar method; caches the spare variate.
  double normal();

  double rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }

  /// Student-t with integer `df`, rescaled to unit variance (df > 2).
  double student_t(int df);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace covlaw
