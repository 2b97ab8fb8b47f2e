#pragma once

#include <cstdint>

namespace pesin {

/// Counter-based uniform stream: the value for (seed, index, slot) is a pure
/// function of its arguments, so words can be extended or revisited in any
/// order without perturbing already-realized parameters.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t bits(std::uint64_t index, std::uint64_t slot) const {
    std::uint64_t z = mix(seed_ ^ mix(index * 0x9E3779B97F4A7C15ULL + slot + 1));
    return mix(z + slot * 0xD1B54A32D192ED03ULL);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t index, std::uint64_t slot) const {
    return static_cast<double>(bits(index, slot) >> 11) * 0x1.0p-53;
  }

  std::uint64_t seed() const { return seed_; }

 private:
  // SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
};

}  // namespace pesin
