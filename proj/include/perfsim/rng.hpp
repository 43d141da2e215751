#pragma once

#include <cstdint>
#include <limits>

namespace perfsim {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based stream: the i-th output is a pure function of (key, i), so
/// a stream can be split into independent children by deriving new keys.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed = 0) : key_(splitmix64(seed ^ 0x5851f42d4c957f2dULL)) {}

  /// Stream for replica `index` of an experiment seeded with `seed`.
  static CounterRng for_replica(std::uint64_t seed, std::uint64_t index) {
    CounterRng r;
    r.key_ = splitmix64(splitmix64(seed) + splitmix64(index ^ 0xd1b54a32d192ed03ULL));
    return r;
  }

  CounterRng split(std::uint64_t tag) const {
    CounterRng r;
    r.key_ = splitmix64(key_ ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
    return r;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace perfsim
