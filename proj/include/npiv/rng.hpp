#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace npiv {

// Counter-based splittable PRNG.
//
// A stream is a (key, counter) pair; draw i is a strong 64-bit mix of
// key + i*gamma, so a stream never mutates anything but its counter and
// substreams are derived purely from the key. Replication r of a simulation
// uses root(seed).split(r); bootstrap draw b inside it uses .split(r).split(b).
// Results are therefore identical no matter how replications are scheduled
// across threads. The mixer is the 64-bit finalizer from SplitMix64.
class SplitRng {
 public:
  using result_type = std::uint64_t;

  static SplitRng root(std::uint64_t seed) { return SplitRng(mix(seed + kGamma)); }

  // Derive the key of child substream `child`; counters start at zero.
  SplitRng split(std::uint64_t child) const {
    return SplitRng(mix(key_ ^ mix((child + 1) * kGamma2)));
  }

  std::uint64_t next_u64() { return mix(key_ + (++ctr_) * kGamma); }

  // Uniform on the open interval (0,1): 53-bit resolution, never returns 0 or 1.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Exponential with mean 1.
  double exponential() { return -std::log(uniform01()); }

  // UniformRandomBitGenerator interface.
  std::uint64_t operator()() { return next_u64(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~0ULL; }

 private:
  explicit SplitRng(std::uint64_t key) : key_(key) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kGamma2 = 0xD1B54A32D192ED03ULL;

  std::uint64_t key_ = 0;
  std::uint64_t ctr_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace npiv
