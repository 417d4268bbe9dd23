#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparselbm/adjacency.hpp"
#include "sparselbm/types.hpp"

namespace sparselbm {

struct SparseHeader {
  Dims dims{};
  std::uint64_t fluid_cells = 0;
  std::string scheme;  ///< canonical numbering scheme text
  Periodic periodic{};
  /// Contiguous start index of each external partition, when present.
  std::optional<std::vector<std::uint64_t>> partition_starts;

  friend bool operator==(const SparseHeader&, const SparseHeader&) = default;
};

/// Bytes per record: x, y, z as u32 followed by 18 u64 neighbor indices.
inline constexpr std::uint64_t kRecordBytes = 3 * 4 + kLinks * 8;

/// Sorts `records` by contiguous index and writes them after the header, in
/// `writers` equally sized chunks at their final offsets. The bytes do not
/// depend on `writers`. Throws consistency before touching the file when
/// the indices are not exactly 1..N_f.
void write_sparse(const std::filesystem::path& path, std::vector<SparseRecord> records, const SparseHeader& header,
                  std::uint32_t writers = 1);

struct SparseChunk {
  SparseHeader header;
  std::uint64_t first_ic = 1;  ///< contiguous index of records.front()
  std::vector<SparseRecord> records;
};

SparseHeader read_sparse_header(const std::filesystem::path& path);

/// Records of the whole file.
SparseChunk read_sparse(const std::filesystem::path& path);

/// Records of chunk `n` out of `count` equal chunks; seeks straight to them.
SparseChunk read_chunk(const std::filesystem::path& path, std::uint32_t n, std::uint32_t count);

/// Records with contiguous index in [first, last]; 1 <= first, last <= N_f.
SparseChunk read_range(const std::filesystem::path& path, std::uint64_t first, std::uint64_t last);

} // namespace sparselbm
