#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "sparselbm/adjacency.hpp"

namespace sparselbm {

/// Partition p holds contiguous indices [boundaries[p], boundaries[p+1]).
struct PartitionAssignment {
  std::vector<std::uint64_t> boundaries;

  [[nodiscard]] std::uint32_t count() const noexcept {
    return boundaries.empty() ? 0 : static_cast<std::uint32_t>(boundaries.size() - 1);
  }
  [[nodiscard]] std::uint64_t fluid_cells() const noexcept { return boundaries.empty() ? 0 : boundaries.back() - 1; }
  [[nodiscard]] std::uint64_t first(std::uint32_t p) const noexcept { return boundaries[p]; }
  [[nodiscard]] std::uint64_t last(std::uint32_t p) const noexcept { return boundaries[p + 1] - 1; }
  [[nodiscard]] std::uint64_t size(std::uint32_t p) const noexcept { return boundaries[p + 1] - boundaries[p]; }
  /// Partition holding contiguous index `ic` (1 <= ic <= N_f).
  [[nodiscard]] std::uint32_t partition_of(std::uint64_t ic) const noexcept;

  friend bool operator==(const PartitionAssignment&, const PartitionAssignment&) = default;
};

/// N_f cells cut into `parts` chunks; the first N_f mod parts are one larger.
/// Throws too_many_processes when parts > N_f.
PartitionAssignment chunk_ranges(std::uint64_t fluid_cells, std::uint64_t parts);

/// Assignment from a list of partition start indices. Throws format when the
/// list is empty, does not begin at 1, is not strictly increasing or exceeds N_f.
PartitionAssignment assignment_from_starts(std::span<const std::uint64_t> starts, std::uint64_t fluid_cells);

/// Reads a text partition map, one start index per line.
PartitionAssignment import_partition_map(const std::filesystem::path& path, std::uint64_t fluid_cells);

struct PartitionStats {
  std::vector<std::uint64_t> neighbor_count;  ///< distinct other partitions linked to
  std::vector<std::uint64_t> remote_links;    ///< directed links leaving the partition
  std::vector<std::uint64_t> fluid_cells;

  [[nodiscard]] std::uint64_t total_remote_links() const noexcept;
  [[nodiscard]] std::uint64_t max_neighbor_count() const noexcept;
};

/// Counts, per partition, the directed stencil links whose target lies in a
/// different partition and the distinct partitions they reach.
PartitionStats partition_stats(std::span<const SparseRecord> records, const PartitionAssignment& assignment);

/// `bin,count` rows. Bins are labelled by their lower edge.
using Histogram = std::vector<std::pair<std::uint64_t, std::uint64_t>>;

/// Unit bins; only occupied bins are listed.
Histogram neighbor_histogram(const PartitionStats& stats);
/// 64 equal-width bins starting at 0 and covering the largest value.
Histogram remote_link_histogram(const PartitionStats& stats);

struct HistogramFiles {
  std::filesystem::path neighbors;
  std::filesystem::path remote_links;
};

/// Writes `<prefix>_neighbors.csv` and `<prefix>_remote_links.csv`.
HistogramFiles emit_histograms(const PartitionStats& stats, const std::filesystem::path& prefix);

} // namespace sparselbm
