#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sparselbm/types.hpp"

namespace sparselbm {

enum class CellType : std::uint8_t { solid = 0, fluid = 1 };

/// Dense full representation: one flag per cell of the bounding box,
/// stored row-major with x fastest.
class VoxelGrid {
public:
  VoxelGrid() = default;
  /// All cells start with `fill`. Throws invalid_geometry on a zero extent.
  explicit VoxelGrid(Dims dims, CellType fill = CellType::solid);

  [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
  [[nodiscard]] std::uint64_t cell_count() const noexcept { return flags_.size(); }
  [[nodiscard]] std::uint64_t fluid_count() const noexcept;

  [[nodiscard]] bool is_fluid(const Coord& c) const noexcept {
    return flags_[linear_index(c, dims_)] != 0;
  }
  [[nodiscard]] bool is_fluid(std::uint64_t linear) const noexcept { return flags_[linear] != 0; }
  void set(const Coord& c, CellType t) noexcept {
    flags_[linear_index(c, dims_)] = static_cast<std::uint8_t>(t);
  }
  void set(std::uint64_t linear, CellType t) noexcept {
    flags_[linear] = static_cast<std::uint8_t>(t);
  }

  [[nodiscard]] std::span<const std::uint8_t> flags() const noexcept { return flags_; }

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

private:
  Dims dims_{};
  std::vector<std::uint8_t> flags_;
};

/// Empty channel of diameter d: (5d, d, d) with a one-cell solid wall on the
/// four faces normal to y and z.
VoxelGrid make_channel(std::uint64_t d);

/// Tube of diameter d along x, filled by sequential random insertion of
/// spheres of radius d/6. Deterministic in (d, seed).
VoxelGrid make_packing(std::uint64_t d, std::uint64_t seed);

/// Two parallel plates: solid rows at y = 0 and y = Y-1, fluid elsewhere.
/// Used for the Poiseuille validation with periodic x and z.
VoxelGrid make_plate_channel(Dims dims);

/// Axis-aligned box owned by one preprocessor rank, lo inclusive, hi exclusive.
struct RankBox {
  std::uint32_t rank = 0;
  Coord lo{};
  Coord hi{};

  [[nodiscard]] Dims extent() const noexcept { return {hi.x - lo.x, hi.y - lo.y, hi.z - lo.z}; }
  [[nodiscard]] std::uint64_t volume() const noexcept { return extent().volume(); }
  [[nodiscard]] bool contains(const Coord& c) const noexcept {
    return c.x >= lo.x && c.x < hi.x && c.y >= lo.y && c.y < hi.y && c.z >= lo.z && c.z < hi.z;
  }
  friend bool operator==(const RankBox&, const RankBox&) = default;
};

/// Per-axis box counts chosen by decompose_ranks.
struct RankGrid {
  std::uint32_t px = 1;
  std::uint32_t py = 1;
  std::uint32_t pz = 1;
  friend bool operator==(const RankGrid&, const RankGrid&) = default;
};

/// Factorization of `ranks` into per-axis counts with the smallest internal
/// surface. Throws invalid_decomposition when no factorization fits the dims.
RankGrid choose_rank_grid(const Dims& dims, std::uint32_t ranks);

/// Tiles the bounding box into `ranks` boxes; rank ids run x-fastest over the
/// box grid.
std::vector<RankBox> decompose_ranks(const Dims& dims, std::uint32_t ranks);

/// Rank owning `c` in a decomposition produced by decompose_ranks.
std::uint32_t owner_of(std::span<const RankBox> boxes, const Coord& c);

void voxel_save(const std::filesystem::path& path, const VoxelGrid& grid);
VoxelGrid voxel_load(const std::filesystem::path& path);

} // namespace sparselbm
