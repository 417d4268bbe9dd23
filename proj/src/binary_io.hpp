#pragma once

// Little-endian scalar encoding shared by the voxel and sparse file formats.

#include <array>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "sparselbm/error.hpp"

namespace sparselbm::detail {

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xffu));
  }
}

template <typename T>
T get_le(const unsigned char* p) noexcept {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  }
  return static_cast<T>(v);
}

/// Sequential reader over a stream that reports the byte offset of every
/// failure.
class LeReader {
public:
  LeReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  template <typename T>
  T read(const char* field) {
    std::array<unsigned char, sizeof(T)> buf{};
    read_bytes(buf.data(), buf.size(), field);
    return get_le<T>(buf.data());
  }

  void read_bytes(void* dst, std::size_t n, const char* field) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw Error(ErrorCode::format, what_ + ": truncated while reading " + field + " at offset " +
                                         std::to_string(offset_ + static_cast<std::uint64_t>(in_.gcount())));
    }
    offset_ += n;
  }

  [[nodiscard]] std::uint64_t offset() const noexcept { return offset_; }

private:
  std::istream& in_;
  std::string what_;
  std::uint64_t offset_ = 0;
};

} // namespace sparselbm::detail
