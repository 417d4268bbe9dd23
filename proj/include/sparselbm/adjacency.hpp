#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "sparselbm/geometry.hpp"
#include "sparselbm/indexer.hpp"
#include "sparselbm/types.hpp"

namespace sparselbm {

inline constexpr int kLinks = 18;

/// The 18 moving D3Q19 directions; i and i^1 are opposite.
inline constexpr std::array<std::array<int, 3>, kLinks> kStencil{{
    {1, 0, 0},  {-1, 0, 0}, {0, 1, 0},  {0, -1, 0}, {0, 0, 1},  {0, 0, -1},
    {1, 1, 0},  {-1, -1, 0}, {1, -1, 0}, {-1, 1, 0}, {1, 0, 1},  {-1, 0, -1},
    {1, 0, -1}, {-1, 0, 1}, {0, 1, 1},  {0, -1, -1}, {0, 1, -1}, {0, -1, 1},
}};

[[nodiscard]] constexpr int opposite(int link) noexcept { return link ^ 1; }

/// One fluid cell of the sparse representation. nbr[i] is the contiguous
/// index of the fluid cell in direction kStencil[i], or 0.
struct SparseRecord {
  Coord coord{};
  std::uint64_t ic = 0;
  std::array<std::uint64_t, kLinks> nbr{};

  friend bool operator==(const SparseRecord&, const SparseRecord&) = default;
};

/// What one preprocessor rank holds of the full representation: its box
/// of flags and contiguous indices.
struct RankLocal {
  RankBox box;
  BoxIndexMap index;  ///< 0 marks a solid cell
};

/// Rank box grown by one cell on every side, filled from the rank's own data
/// and the halo it received.
class RankView {
public:
  enum class Slot : std::uint8_t { missing, outside, solid, fluid };

  RankView(const RankBox& box, const Dims& domain, const Periodic& periodic);

  [[nodiscard]] const RankBox& box() const noexcept { return box_; }
  [[nodiscard]] const Dims& domain() const noexcept { return domain_; }
  [[nodiscard]] const Periodic& periodic() const noexcept { return periodic_; }

  /// Slot of the grown box for offsets in [-1, extent] relative to box.lo.
  [[nodiscard]] std::uint64_t slot_of(std::int64_t dx, std::int64_t dy, std::int64_t dz) const noexcept;
  [[nodiscard]] std::uint64_t slot_count() const noexcept { return kind_.size(); }

  void fill(std::uint64_t slot, Slot kind, std::uint64_t ic) noexcept {
    kind_[slot] = kind;
    ic_[slot] = ic;
  }
  [[nodiscard]] Slot kind(std::uint64_t slot) const noexcept { return kind_[slot]; }
  [[nodiscard]] std::uint64_t ic(std::uint64_t slot) const noexcept { return ic_[slot]; }

  /// Ranks that contributed halo cells.
  [[nodiscard]] const std::set<std::uint32_t>& halo_sources() const noexcept { return sources_; }
  void add_source(std::uint32_t rank) { sources_.insert(rank); }
  /// Number of cells outside the own box that hold received data.
  [[nodiscard]] std::uint64_t halo_cells() const noexcept { return halo_cells_; }
  void count_halo_cell() noexcept { ++halo_cells_; }

private:
  RankBox box_;
  Dims domain_;
  Periodic periodic_;
  Dims grown_;
  std::vector<Slot> kind_;
  std::vector<std::uint64_t> ic_;
  std::set<std::uint32_t> sources_;
  std::uint64_t halo_cells_ = 0;
};

/// Every rank obtains (flag, contiguous index) for all cells within Chebyshev
/// distance 1 of its box, wrapped on periodic axes. Throws protocol when a
/// halo cell inside the domain was not delivered.
std::vector<RankView> halo_exchange(std::span<const RankLocal> locals, const Dims& domain, const Periodic& periodic,
                                    Execution execution = Execution::sequential);

/// Records of the fluid cells in the view's box, in box row-major order.
std::vector<SparseRecord> build_adjacency(const RankView& view);

} // namespace sparselbm
