#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "sparselbm/adjacency.hpp"
#include "sparselbm/geometry.hpp"
#include "sparselbm/numbering.hpp"
#include "sparselbm/sparse_io.hpp"

namespace sparselbm {

struct PreprocessOptions {
  std::uint32_t ranks = 1;
  Periodic periodic{};
  Execution execution = Execution::sequential;
  std::ostream* trace = nullptr;
  /// External partition starts stored in the file header.
  std::optional<std::vector<std::uint64_t>> partition_starts;
};

/// Sparse representation held in memory; records sorted by contiguous index.
struct SparseDomain {
  SparseHeader header;
  std::vector<SparseRecord> records;
};

/// Full preprocessing on `options.ranks` simulated ranks: geometric
/// decomposition, run detection, octree reduction, contiguous numbering,
/// halo exchange and adjacency build.
SparseDomain preprocess(const VoxelGrid& grid, const NumberingScheme& scheme, const PreprocessOptions& options = {});

/// preprocess followed by a chunked write with one writer per rank.
SparseHeader preprocess_to_file(const VoxelGrid& grid, const NumberingScheme& scheme,
                                const std::filesystem::path& out, const PreprocessOptions& options = {});

} // namespace sparselbm
