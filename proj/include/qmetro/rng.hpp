#pragma once

#include <cmath>
#include <cstdint>

namespace qmetro {

// Counter-based pseudo-random generator built on the SplitMix64 finalizer.
// Every draw is addressed by (key, counter), so substreams derived with
// stream() are statistically independent and a loop over counters produces
// the same numbers no matter how it is split across threads.  All outputs
// are computed from integer arithmetic and are identical on any platform
// with IEEE-754 doubles.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x8000000000000000ULL)) {}

  // Derived substream; independent of the parent for distinct stream ids.
  Rng stream(std::uint64_t stream_id) const {
    Rng r(0);
    r.key_ = mix(key_ + 0x9E3779B97F4A7C15ULL * (stream_id + 1));
    return r;
  }

  std::uint64_t bits(std::uint64_t counter) const {
    return mix(key_ + 0xBF58476D1CE4E5B9ULL * (counter + 1));
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes counters (2c, 2c+1).
  double gaussian(std::uint64_t counter) const {
    const double u1 = 1.0 - uniform(2 * counter);      // (0, 1]
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  std::uint64_t key() const { return key_; }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

}  // namespace qmetro
