#pragma once

// Test-only helpers: scratch directories, random geometries and brute-force
// reference computations that do not share code paths with the library.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "sparselbm/adjacency.hpp"
#include "sparselbm/geometry.hpp"
#include "sparselbm/indexer.hpp"
#include "sparselbm/numbering.hpp"
#include "sparselbm/splitmix64.hpp"

namespace sparselbm::testing {

class TempDir {
public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "sparselbm-XXXXXX").string();
    if (mkdtemp(tmpl.data()) == nullptr) {
      throw std::runtime_error("mkdtemp failed");
    }
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Random dims in [lo, hi] per axis and a random fluid fraction.
inline VoxelGrid random_grid(std::uint64_t seed, std::uint64_t lo, std::uint64_t hi) {
  SplitMix64 rng(seed);
  const Dims d{lo + rng.below(hi - lo + 1), lo + rng.below(hi - lo + 1), lo + rng.below(hi - lo + 1)};
  const double fluid = 0.3 + 0.6 * rng.uniform();
  VoxelGrid g(d, CellType::solid);
  for (std::uint64_t i = 0; i < d.volume(); ++i) {
    if (rng.uniform() < fluid) {
      g.set(i, CellType::fluid);
    }
  }
  return g;
}

/// Grid with explicit dims and a seeded random fill.
inline VoxelGrid random_fill(Dims d, std::uint64_t seed, double fluid) {
  SplitMix64 rng(seed);
  VoxelGrid g(d, CellType::solid);
  for (std::uint64_t i = 0; i < d.volume(); ++i) {
    if (rng.uniform() < fluid) {
      g.set(i, CellType::fluid);
    }
  }
  return g;
}

/// Blocked lexicographic index by sorting every cell on the key
/// (z/b, y/b, x/b, z%b, y%b, x%b) and taking its rank.
inline std::vector<std::uint64_t> lex_by_sorting(const Dims& d, std::uint64_t b) {
  std::vector<std::pair<std::array<std::uint64_t, 6>, std::uint64_t>> keyed;
  for (std::uint64_t i = 0; i < d.volume(); ++i) {
    const Coord c = from_linear(i, d);
    keyed.push_back({{c.z / b, c.y / b, c.x / b, c.z % b, c.y % b, c.x % b}, i});
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::uint64_t> index(d.volume());
  for (std::uint64_t r = 0; r < keyed.size(); ++r) {
    index[keyed[r].second] = r;
  }
  return index;
}

/// Morton code assembled group by group.
inline std::uint64_t morton_by_groups(const Coord& c, std::uint32_t g) {
  std::uint64_t code = 0;
  const std::uint64_t mask = (std::uint64_t{1} << g) - 1;
  for (std::uint32_t j = 0; j * g < 21; ++j) {
    const std::uint32_t shift = 3 * g * j;
    code |= ((c.x >> (g * j)) & mask) << shift;
    code |= ((c.y >> (g * j)) & mask) << (shift + g);
    code |= ((c.z >> (g * j)) & mask) << (shift + 2 * g);
  }
  return code;
}

/// Runs found by scanning every cell in index order and cutting whenever the
/// owner changes.
inline std::vector<std::vector<IncellInfo>> runs_by_scan(const VoxelGrid& grid, const NumberingScheme& scheme,
                                                         const std::vector<RankBox>& boxes) {
  const Dims& d = grid.dims();
  std::vector<std::tuple<std::uint64_t, std::uint32_t, bool>> cells;  // index, owner, fluid
  for (std::uint64_t i = 0; i < d.volume(); ++i) {
    const Coord c = from_linear(i, d);
    std::uint32_t owner = 0;
    for (const RankBox& b : boxes) {
      if (b.contains(c)) {
        owner = b.rank;
      }
    }
    cells.emplace_back(scheme.index_of(c, d), owner, grid.is_fluid(i));
  }
  std::sort(cells.begin(), cells.end());
  std::vector<std::vector<IncellInfo>> runs(boxes.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto& [index, owner, fluid] = cells[k];
    if (k == 0 || std::get<1>(cells[k - 1]) != owner) {
      if (k > 0) {
        auto& prev = runs[std::get<1>(cells[k - 1])].back();
        prev.outcell = index;
      }
      runs[owner].push_back({index, kSentinelEnd, 0, owner, std::nullopt});
    }
    if (fluid) {
      ++runs[owner].back().fluid_count;
    }
  }
  return runs;
}

/// Neighbor indices straight from a dense contiguous-index array.
inline std::vector<SparseRecord> adjacency_by_lookup(const VoxelGrid& grid, const std::vector<std::uint64_t>& ic,
                                                     const Periodic& periodic) {
  const Dims& d = grid.dims();
  std::vector<SparseRecord> out;
  for (std::uint64_t i = 0; i < d.volume(); ++i) {
    if (ic[i] == 0) {
      continue;
    }
    SparseRecord r;
    r.coord = from_linear(i, d);
    r.ic = ic[i];
    for (int k = 0; k < kLinks; ++k) {
      std::array<std::int64_t, 3> n{};
      bool ok = true;
      for (int a = 0; a < 3; ++a) {
        n[a] = static_cast<std::int64_t>(r.coord[a]) + kStencil[k][a];
        const auto ext = static_cast<std::int64_t>(d[a]);
        if (n[a] < 0 || n[a] >= ext) {
          if (periodic[a]) {
            n[a] = (n[a] + ext) % ext;
          } else {
            ok = false;
          }
        }
      }
      r.nbr[k] = ok ? ic[linear_index({static_cast<std::uint64_t>(n[0]), static_cast<std::uint64_t>(n[1]),
                                       static_cast<std::uint64_t>(n[2])},
                                      d)]
                    : 0;
    }
    out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const SparseRecord& a, const SparseRecord& b) { return a.ic < b.ic; });
  return out;
}

} // namespace sparselbm::testing
