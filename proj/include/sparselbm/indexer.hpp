#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "sparselbm/geometry.hpp"
#include "sparselbm/numbering.hpp"
#include "sparselbm/types.hpp"

namespace sparselbm {

/// Outcell of the globally last run; compares greater than every index.
inline constexpr std::uint64_t kSentinelEnd = std::numeric_limits<std::uint64_t>::max();

/// Incell info: one maximal run of consecutive existing indices owned by a
/// single rank (or, after merging, by a subtree of ranks).
struct IncellInfo {
  std::uint64_t incell = 0;
  std::uint64_t outcell = kSentinelEnd;
  std::uint64_t fluid_count = 0;
  std::uint32_t owner_rank = 0;
  std::optional<std::uint64_t> start;  ///< contiguous index of the first fluid cell

  friend bool operator==(const IncellInfo&, const IncellInfo&) = default;
};

std::ostream& operator<<(std::ostream& os, const IncellInfo& ici);

/// Runs of the cells inside `box`, sorted by incell.
std::vector<IncellInfo> find_runs(const VoxelGrid& grid, const NumberingScheme& scheme, const RankBox& box,
                                  std::span<const RankBox> all_boxes);

struct RankGroup {
  std::uint32_t master = 0;
  std::vector<std::uint32_t> members;  ///< ascending, master first
};

/// Incomplete octree over ranks. levels[0] groups the leaves, levels.back()
/// holds the single group whose master is the root.
struct RankTree {
  std::uint32_t ranks = 1;
  std::vector<std::vector<RankGroup>> levels;

  [[nodiscard]] std::size_t height() const noexcept { return levels.size(); }
  [[nodiscard]] std::uint32_t root() const noexcept { return 0; }
};

/// Leaves grouped in consecutive blocks of eight; each group's smallest rank
/// is its master. Repeats on the masters until a single node remains.
RankTree build_rank_tree(std::uint32_t ranks);

/// Sorts by incell, rewrites the owner to `master` and merges runs where the
/// outcell of one equals the incell of the next. Throws protocol on
/// overlapping runs.
std::vector<IncellInfo> merge_runs(std::span<const IncellInfo> runs, std::uint32_t master);

/// Assigns starts to a root-level list: 1 for the first, then the previous
/// start plus the previous fluid count.
void assign_root_starts(std::vector<IncellInfo>& merged);

/// Copies starts from `merged` into each original run it contains, offset by
/// the fluid cells of the runs merged ahead of it. `originals` keeps its order.
void map_back_starts(std::span<const IncellInfo> merged, std::vector<IncellInfo>& originals);

struct ReduceOptions {
  Execution execution = Execution::sequential;
  std::ostream* trace = nullptr;  ///< logs every upward and downward message when set
};

/// Runs the upward merge and downward start distribution over `tree` with one
/// simulated rank per list. Returns each rank's runs with `start` set.
std::vector<std::vector<IncellInfo>> octree_reduce(std::vector<std::vector<IncellInfo>> per_rank,
                                                   const RankTree& tree, const ReduceOptions& options = {});

/// Contiguous indices of the cells of one rank box, row-major within the box.
struct BoxIndexMap {
  RankBox box;
  std::vector<std::uint64_t> index;

  [[nodiscard]] std::uint64_t at(const Coord& c) const {
    const Dims e = box.extent();
    return index[linear_index({c.x - box.lo.x, c.y - box.lo.y, c.z - box.lo.z}, e)];
  }
};

/// Numbers the fluid cells of `box` from the starts in `runs`; solids get 0.
BoxIndexMap assign_contiguous(const VoxelGrid& grid, const NumberingScheme& scheme, const RankBox& box,
                              std::span<const IncellInfo> runs);

/// Reference numbering: cells visited in index order, fluid cells counted
/// 1, 2, 3, ...; solids 0. Dense over the grid, row-major.
std::vector<std::uint64_t> serial_oracle(const VoxelGrid& grid, const NumberingScheme& scheme);

/// Whole distributed path (decompose, find runs, reduce, assign) gathered
/// into one dense row-major array.
std::vector<std::uint64_t> distributed_contiguous_index(const VoxelGrid& grid, const NumberingScheme& scheme,
                                                        std::uint32_t ranks, const ReduceOptions& options = {});

} // namespace sparselbm
