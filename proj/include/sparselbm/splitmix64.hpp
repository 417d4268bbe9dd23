#pragma once

#include <cstdint>

namespace sparselbm {

/// splitmix64 generator (Steele, Lea, Flood). Fixed algorithm so geometries
/// are reproducible across platforms and standard library versions.
class SplitMix64 {
public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  constexpr double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n); n > 0. Modulo bias is irrelevant here.
  constexpr std::uint64_t below(std::uint64_t n) noexcept { return next() % n; }

private:
  std::uint64_t state_;
};

} // namespace sparselbm
