#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "sparselbm/types.hpp"

namespace sparselbm {

/// Lexicographic order over cubic blocks of side `factor`; cells inside a
/// block are again lexicographic. factor = 1 is plain row-major order.
struct LexBlocked {
  std::uint64_t factor = 1;
  friend bool operator==(const LexBlocked&, const LexBlocked&) = default;
};

/// Z curve interleaving coordinate bits in groups of `group_bits` (1 or 2),
/// x least significant.
struct Morton {
  std::uint32_t group_bits = 1;
  friend bool operator==(const Morton&, const Morton&) = default;
};

/// Injective index function I(x, y, z) over every cell of the bounding box.
class NumberingScheme {
public:
  NumberingScheme() = default;
  NumberingScheme(LexBlocked lex);   // NOLINT(google-explicit-constructor)
  NumberingScheme(Morton morton);    // NOLINT(google-explicit-constructor)

  static NumberingScheme lex(std::uint64_t factor) { return LexBlocked{factor}; }
  static NumberingScheme morton(std::uint32_t group_bits) { return Morton{group_bits}; }

  [[nodiscard]] bool is_lex() const noexcept { return std::holds_alternative<LexBlocked>(kind_); }
  [[nodiscard]] const std::variant<LexBlocked, Morton>& kind() const noexcept { return kind_; }

  /// Throws domain when `c` lies outside `dims`.
  [[nodiscard]] std::uint64_t index_of(const Coord& c, const Dims& dims) const;

  /// Exclusive upper bound of every index this scheme produces over `dims`.
  [[nodiscard]] std::uint64_t index_bound(const Dims& dims) const;

  /// Smallest index >= `from` that belongs to a cell inside `dims`, or
  /// nullopt when none exists. Gapless schemes return `from` itself.
  [[nodiscard]] std::optional<std::uint64_t> next_existing(std::uint64_t from, const Dims& dims) const;

  /// Canonical text: "lex:b=<int>" or "morton:g=<1|2>".
  [[nodiscard]] std::string text() const;
  static NumberingScheme parse(std::string_view text);

  friend bool operator==(const NumberingScheme&, const NumberingScheme&) = default;

private:
  std::variant<LexBlocked, Morton> kind_{LexBlocked{1}};
};

} // namespace sparselbm
