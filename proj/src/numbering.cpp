#include "sparselbm/numbering.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>

#include "sparselbm/error.hpp"

namespace sparselbm {

NumberingScheme::NumberingScheme(LexBlocked lex) : kind_(lex) {
  if (lex.factor < 1) {
    throw Error(ErrorCode::parameter, "blocking factor must be >= 1");
  }
}

NumberingScheme::NumberingScheme(Morton morton) : kind_(morton) {
  if (morton.group_bits != 1 && morton.group_bits != 2) {
    throw Error(ErrorCode::parameter, "Morton group width must be 1 or 2");
  }
}

namespace {

std::uint64_t lex_index(const Coord& c, const Dims& d, std::uint64_t b) {
  const std::uint64_t bx = c.x / b;
  const std::uint64_t by = c.y / b;
  const std::uint64_t bz = c.z / b;
  // Extents of the (possibly truncated) block layer, row and block holding c.
  const std::uint64_t hz = std::min(b, d.z - bz * b);
  const std::uint64_t hy = std::min(b, d.y - by * b);
  const std::uint64_t wx = std::min(b, d.x - bx * b);
  const std::uint64_t before_layer = bz * b * d.y * d.x;
  const std::uint64_t before_row = by * b * d.x * hz;
  const std::uint64_t before_block = bx * b * hy * hz;
  const std::uint64_t in_block = ((c.z - bz * b) * hy + (c.y - by * b)) * wx + (c.x - bx * b);
  return before_layer + before_row + before_block + in_block;
}

/// Bits per coordinate so that every extent fits; even for 2-bit groups.
int morton_bits(const Dims& d, std::uint32_t g) {
  const std::uint64_t m = std::max({d.x, d.y, d.z});
  int nb = static_cast<int>(std::bit_width(m - 1));
  if (g == 2 && nb % 2 != 0) {
    ++nb;
  }
  if (3 * nb > 63) {
    throw Error(ErrorCode::domain, "dimensions too large for a 64-bit Morton code");
  }
  return nb;
}

struct BitSlot {
  int axis;
  int bit;
};

/// Coordinate bit stored at code bit position p.
BitSlot morton_slot(int p, std::uint32_t g) {
  if (g == 1) {
    return {p % 3, p / 3};
  }
  const int group = p / 6;
  const int within = p % 6;
  return {within / 2, 2 * group + within % 2};
}

std::uint64_t morton_encode(const Coord& c, int nb, std::uint32_t g) {
  std::uint64_t code = 0;
  for (int p = 0; p < 3 * nb; ++p) {
    const BitSlot s = morton_slot(p, g);
    code |= ((c[s.axis] >> s.bit) & 1u) << p;
  }
  return code;
}

/// Smallest code >= from whose decoded coordinate is inside dims. Walks the
/// code from the most significant bit, tracking per axis whether the prefix is
/// still equal to the largest admissible coordinate.
std::optional<std::uint64_t> morton_next(std::uint64_t from, const Dims& d, std::uint32_t g) {
  const int nb = morton_bits(d, g);
  const int total = 3 * nb;
  if (total < 64 && from >> total != 0) {
    return std::nullopt;
  }
  const std::array<std::uint64_t, 3> max{d.x - 1, d.y - 1, d.z - 1};
  std::array<bool, 3> below{false, false, false};
  int candidate = -1;
  for (int p = total - 1; p >= 0; --p) {
    const BitSlot s = morton_slot(p, g);
    const unsigned cb = (from >> p) & 1u;
    if (below[s.axis]) {
      if (cb == 0) {
        candidate = p;
      }
      continue;
    }
    const unsigned mb = (max[s.axis] >> s.bit) & 1u;
    if (cb < mb) {
      candidate = p;
      below[s.axis] = true;
    } else if (cb > mb) {
      if (candidate < 0) {
        return std::nullopt;
      }
      const std::uint64_t keep = candidate + 1 < 64 ? (from >> (candidate + 1)) << (candidate + 1) : 0;
      return keep | (std::uint64_t{1} << candidate);
    }
  }
  return from;
}

} // namespace

std::uint64_t NumberingScheme::index_of(const Coord& c, const Dims& dims) const {
  if (!inside(c, dims)) {
    throw Error(ErrorCode::domain, "coordinate (" + std::to_string(c.x) + "," + std::to_string(c.y) + "," +
                                       std::to_string(c.z) + ") outside the bounding box");
  }
  if (const auto* lex = std::get_if<LexBlocked>(&kind_)) {
    return lex_index(c, dims, lex->factor);
  }
  const auto g = std::get<Morton>(kind_).group_bits;
  return morton_encode(c, morton_bits(dims, g), g);
}

std::uint64_t NumberingScheme::index_bound(const Dims& dims) const {
  if (is_lex()) {
    return dims.volume();
  }
  const auto g = std::get<Morton>(kind_).group_bits;
  return std::uint64_t{1} << (3 * morton_bits(dims, g));
}

std::optional<std::uint64_t> NumberingScheme::next_existing(std::uint64_t from, const Dims& dims) const {
  if (is_lex()) {
    return from < dims.volume() ? std::optional(from) : std::nullopt;
  }
  return morton_next(from, dims, std::get<Morton>(kind_).group_bits);
}

std::string NumberingScheme::text() const {
  if (const auto* lex = std::get_if<LexBlocked>(&kind_)) {
    return "lex:b=" + std::to_string(lex->factor);
  }
  return "morton:g=" + std::to_string(std::get<Morton>(kind_).group_bits);
}

namespace {

[[noreturn]] void bad_token(std::string_view text, std::string_view token, std::string_view why) {
  throw Error(ErrorCode::parse, "in scheme '" + std::string(text) + "': token '" + std::string(token) + "' " +
                                    std::string(why));
}

std::uint64_t parse_uint(std::string_view text, std::string_view digits) {
  std::uint64_t v = 0;
  if (digits.empty()) {
    bad_token(text, digits, "is empty, expected an integer");
  }
  if (digits.size() > 1 && digits.front() == '0') {
    bad_token(text, digits, "has a leading zero");
  }
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
    bad_token(text, digits, "is not an unsigned integer");
  }
  return v;
}

} // namespace

NumberingScheme NumberingScheme::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    bad_token(text, text, "has no ':' separating kind and parameter");
  }
  const std::string_view kind = text.substr(0, colon);
  const std::string_view param = text.substr(colon + 1);
  const auto eq = param.find('=');
  if (eq == std::string_view::npos) {
    bad_token(text, param, "has no '=' in the parameter");
  }
  const std::string_view key = param.substr(0, eq);
  const std::string_view value = param.substr(eq + 1);
  if (kind == "lex") {
    if (key != "b") {
      bad_token(text, key, "is not a lex parameter (expected 'b')");
    }
    const std::uint64_t b = parse_uint(text, value);
    if (b < 1) {
      bad_token(text, value, "must be >= 1");
    }
    return LexBlocked{b};
  }
  if (kind == "morton") {
    if (key != "g") {
      bad_token(text, key, "is not a morton parameter (expected 'g')");
    }
    const std::uint64_t g = parse_uint(text, value);
    if (g != 1 && g != 2) {
      bad_token(text, value, "must be 1 or 2");
    }
    return Morton{static_cast<std::uint32_t>(g)};
  }
  bad_token(text, kind, "is not a known scheme (expected 'lex' or 'morton')");
}

} // namespace sparselbm
