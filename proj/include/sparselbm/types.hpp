#pragma once

#include <array>
#include <compare>
#include <cstdint>

namespace sparselbm {

/// Cell counts along x, y, z.
struct Dims {
  std::uint64_t x = 0;
  std::uint64_t y = 0;
  std::uint64_t z = 0;

  [[nodiscard]] constexpr std::uint64_t volume() const noexcept { return x * y * z; }
  [[nodiscard]] constexpr std::uint64_t operator[](int axis) const noexcept {
    return axis == 0 ? x : (axis == 1 ? y : z);
  }
  friend constexpr bool operator==(const Dims&, const Dims&) = default;
};

struct Coord {
  std::uint64_t x = 0;
  std::uint64_t y = 0;
  std::uint64_t z = 0;

  [[nodiscard]] constexpr std::uint64_t operator[](int axis) const noexcept {
    return axis == 0 ? x : (axis == 1 ? y : z);
  }
  friend constexpr auto operator<=>(const Coord&, const Coord&) = default;
};

[[nodiscard]] constexpr bool inside(const Coord& c, const Dims& d) noexcept {
  return c.x < d.x && c.y < d.y && c.z < d.z;
}

/// Row-major, x fastest.
[[nodiscard]] constexpr std::uint64_t linear_index(const Coord& c, const Dims& d) noexcept {
  return c.x + d.x * (c.y + d.y * c.z);
}

[[nodiscard]] constexpr Coord from_linear(std::uint64_t i, const Dims& d) noexcept {
  return {i % d.x, (i / d.x) % d.y, i / (d.x * d.y)};
}

/// Per-axis periodicity, bit 0 = x, bit 1 = y, bit 2 = z.
struct Periodic {
  bool x = false;
  bool y = false;
  bool z = false;

  [[nodiscard]] constexpr bool operator[](int axis) const noexcept {
    return axis == 0 ? x : (axis == 1 ? y : z);
  }
  [[nodiscard]] constexpr std::uint32_t bits() const noexcept {
    return (x ? 1u : 0u) | (y ? 2u : 0u) | (z ? 4u : 0u);
  }
  [[nodiscard]] static constexpr Periodic from_bits(std::uint32_t b) noexcept {
    return {(b & 1u) != 0, (b & 2u) != 0, (b & 4u) != 0};
  }
  friend constexpr bool operator==(const Periodic&, const Periodic&) = default;
};

/// How simulated ranks or solver partitions are scheduled in-process.
enum class Execution { sequential, threaded };

} // namespace sparselbm
