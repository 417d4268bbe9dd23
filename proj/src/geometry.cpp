#include "sparselbm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "binary_io.hpp"
#include "sparselbm/error.hpp"
#include "sparselbm/splitmix64.hpp"

namespace sparselbm {

VoxelGrid::VoxelGrid(Dims dims, CellType fill) : dims_(dims) {
  if (dims.x == 0 || dims.y == 0 || dims.z == 0) {
    throw Error(ErrorCode::invalid_geometry, "every extent must be at least 1");
  }
  flags_.assign(dims.volume(), static_cast<std::uint8_t>(fill));
}

std::uint64_t VoxelGrid::fluid_count() const noexcept {
  return static_cast<std::uint64_t>(std::count(flags_.begin(), flags_.end(), std::uint8_t{1}));
}

VoxelGrid make_channel(std::uint64_t d) {
  if (d < 3) {
    throw Error(ErrorCode::invalid_geometry, "channel diameter must be >= 3, got " + std::to_string(d));
  }
  VoxelGrid grid({5 * d, d, d}, CellType::solid);
  for (std::uint64_t z = 1; z + 1 < d; ++z) {
    for (std::uint64_t y = 1; y + 1 < d; ++y) {
      for (std::uint64_t x = 0; x < 5 * d; ++x) {
        grid.set({x, y, z}, CellType::fluid);
      }
    }
  }
  return grid;
}

namespace {

struct Sphere {
  double x, y, z;
};

} // namespace

VoxelGrid make_packing(std::uint64_t d, std::uint64_t seed) {
  if (d < 12) {
    throw Error(ErrorCode::invalid_geometry, "packing diameter must be >= 12, got " + std::to_string(d));
  }
  const double length = 5.0 * static_cast<double>(d);
  const double tube_radius = 0.5 * static_cast<double>(d);
  const double axis = tube_radius;
  const double r = static_cast<double>(d) / 6.0;
  const double min_gap2 = 4.0 * r * r;
  // Centers may sit anywhere in the tube cross-section; the wall clips
  // spheres that reach past it.
  const double center_limit = tube_radius;

  SplitMix64 rng(seed);
  std::vector<Sphere> spheres;
  int rejections = 0;
  while (rejections < 200) {
    // Points outside the tube disk are redrawn and are not rejections.
    Sphere c{};
    double dy = 0;
    double dz = 0;
    do {
      c = {rng.uniform() * length, axis + (2.0 * rng.uniform() - 1.0) * center_limit,
           axis + (2.0 * rng.uniform() - 1.0) * center_limit};
      dy = c.y - axis;
      dz = c.z - axis;
    } while (dy * dy + dz * dz > center_limit * center_limit);
    bool ok = true;
    for (std::size_t i = 0; ok && i < spheres.size(); ++i) {
      const double ex = spheres[i].x - c.x;
      const double ey = spheres[i].y - c.y;
      const double ez = spheres[i].z - c.z;
      ok = ex * ex + ey * ey + ez * ez >= min_gap2;
    }
    if (ok) {
      spheres.push_back(c);
      rejections = 0;
    } else {
      ++rejections;
    }
  }

  VoxelGrid grid({5 * d, d, d}, CellType::solid);
  const double tube_r2 = tube_radius * tube_radius;
  for (std::uint64_t z = 0; z < d; ++z) {
    for (std::uint64_t y = 0; y < d; ++y) {
      const double dy = static_cast<double>(y) + 0.5 - axis;
      const double dz = static_cast<double>(z) + 0.5 - axis;
      if (dy * dy + dz * dz > tube_r2) {
        continue;
      }
      for (std::uint64_t x = 0; x < 5 * d; ++x) {
        grid.set({x, y, z}, CellType::fluid);
      }
    }
  }

  const double r2 = r * r;
  const auto clamp_lo = [](double v) {
    return static_cast<std::uint64_t>(std::max(0.0, std::floor(v)));
  };
  for (const Sphere& s : spheres) {
    const std::uint64_t x0 = clamp_lo(s.x - r);
    const std::uint64_t x1 = std::min<std::uint64_t>(5 * d, clamp_lo(s.x + r) + 1);
    const std::uint64_t y0 = clamp_lo(s.y - r);
    const std::uint64_t y1 = std::min<std::uint64_t>(d, clamp_lo(s.y + r) + 1);
    const std::uint64_t z0 = clamp_lo(s.z - r);
    const std::uint64_t z1 = std::min<std::uint64_t>(d, clamp_lo(s.z + r) + 1);
    for (std::uint64_t z = z0; z < z1; ++z) {
      for (std::uint64_t y = y0; y < y1; ++y) {
        for (std::uint64_t x = x0; x < x1; ++x) {
          const double ex = static_cast<double>(x) + 0.5 - s.x;
          const double ey = static_cast<double>(y) + 0.5 - s.y;
          const double ez = static_cast<double>(z) + 0.5 - s.z;
          if (ex * ex + ey * ey + ez * ez < r2) {
            grid.set({x, y, z}, CellType::solid);
          }
        }
      }
    }
  }
  return grid;
}

VoxelGrid make_plate_channel(Dims dims) {
  if (dims.y < 3) {
    throw Error(ErrorCode::invalid_geometry, "plate channel needs at least 3 rows in y");
  }
  VoxelGrid grid(dims, CellType::fluid);
  for (std::uint64_t z = 0; z < dims.z; ++z) {
    for (std::uint64_t x = 0; x < dims.x; ++x) {
      grid.set({x, 0, z}, CellType::solid);
      grid.set({x, dims.y - 1, z}, CellType::solid);
    }
  }
  return grid;
}

RankGrid choose_rank_grid(const Dims& dims, std::uint32_t ranks) {
  if (ranks == 0) {
    throw Error(ErrorCode::invalid_decomposition, "rank count must be >= 1");
  }
  if (ranks > dims.volume()) {
    throw Error(ErrorCode::invalid_decomposition,
                std::to_string(ranks) + " ranks exceed " + std::to_string(dims.volume()) + " cells");
  }
  const std::array<std::uint64_t, 3> ext{dims.x, dims.y, dims.z};

  bool found = false;
  RankGrid best;
  long double best_area = 0;
  int best_inversions = 0;
  for (std::uint32_t px = 1; px <= ranks; ++px) {
    if (ranks % px != 0 || px > dims.x) {
      continue;
    }
    for (std::uint32_t py = 1; py <= ranks / px; ++py) {
      if ((ranks / px) % py != 0 || py > dims.y) {
        continue;
      }
      const std::uint32_t pz = ranks / px / py;
      if (pz > dims.z) {
        continue;
      }
      const long double area = static_cast<long double>(px - 1) * dims.y * dims.z +
                               static_cast<long double>(py - 1) * dims.x * dims.z +
                               static_cast<long double>(pz - 1) * dims.x * dims.y;
      const std::array<std::uint32_t, 3> p{px, py, pz};
      int inversions = 0;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          if (ext[a] > ext[b] && p[a] < p[b]) {
            ++inversions;
          }
        }
      }
      // Candidates arrive in lexicographic (px, py, pz) order, so strict
      // comparisons keep the lexicographically smallest among equals.
      if (!found || area < best_area || (area == best_area && inversions < best_inversions)) {
        found = true;
        best = {px, py, pz};
        best_area = area;
        best_inversions = inversions;
      }
    }
  }
  if (!found) {
    throw Error(ErrorCode::invalid_decomposition,
                "no factorization of " + std::to_string(ranks) + " ranks fits dims " +
                    std::to_string(dims.x) + "x" + std::to_string(dims.y) + "x" + std::to_string(dims.z));
  }
  return best;
}

namespace {

/// Start of slab `i` when `extent` cells are split into `parts` slabs, the
/// first (extent mod parts) of them one cell larger.
std::uint64_t slab_start(std::uint64_t extent, std::uint64_t parts, std::uint64_t i) {
  const std::uint64_t q = extent / parts;
  const std::uint64_t rem = extent % parts;
  return i * q + std::min(i, rem);
}

} // namespace

std::vector<RankBox> decompose_ranks(const Dims& dims, std::uint32_t ranks) {
  const RankGrid g = choose_rank_grid(dims, ranks);
  std::vector<RankBox> boxes;
  boxes.reserve(ranks);
  for (std::uint32_t bz = 0; bz < g.pz; ++bz) {
    for (std::uint32_t by = 0; by < g.py; ++by) {
      for (std::uint32_t bx = 0; bx < g.px; ++bx) {
        RankBox box;
        box.rank = static_cast<std::uint32_t>(boxes.size());
        box.lo = {slab_start(dims.x, g.px, bx), slab_start(dims.y, g.py, by), slab_start(dims.z, g.pz, bz)};
        box.hi = {slab_start(dims.x, g.px, bx + 1), slab_start(dims.y, g.py, by + 1),
                  slab_start(dims.z, g.pz, bz + 1)};
        boxes.push_back(box);
      }
    }
  }
  return boxes;
}

std::uint32_t owner_of(std::span<const RankBox> boxes, const Coord& c) {
  for (const RankBox& b : boxes) {
    if (b.contains(c)) {
      return b.rank;
    }
  }
  throw Error(ErrorCode::domain, "coordinate is not covered by any rank box");
}

namespace {

constexpr char kVoxelMagic[4] = {'V', 'O', 'X', 'L'};
constexpr std::uint32_t kVoxelVersion = 1;

} // namespace

void voxel_save(const std::filesystem::path& path, const VoxelGrid& grid) {
  std::string out(kVoxelMagic, 4);
  detail::put_le<std::uint32_t>(out, kVoxelVersion);
  detail::put_le<std::uint64_t>(out, grid.dims().x);
  detail::put_le<std::uint64_t>(out, grid.dims().y);
  detail::put_le<std::uint64_t>(out, grid.dims().z);
  const std::size_t header = out.size();
  out.resize(header + (grid.cell_count() + 7) / 8, '\0');
  for (std::uint64_t i = 0; i < grid.cell_count(); ++i) {
    if (grid.is_fluid(i)) {
      out[header + i / 8] = static_cast<char>(static_cast<unsigned char>(out[header + i / 8]) | (1u << (i % 8)));
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  }
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) {
    throw Error(ErrorCode::io, "write failed for " + path.string());
  }
}

VoxelGrid voxel_load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw Error(ErrorCode::io, "cannot open " + path.string());
  }
  detail::LeReader in(f, path.string());
  char magic[4];
  in.read_bytes(magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kVoxelMagic)) {
    throw Error(ErrorCode::format, path.string() + ": bad magic at offset 0");
  }
  const auto version = in.read<std::uint32_t>("version");
  if (version != kVoxelVersion) {
    throw Error(ErrorCode::format, path.string() + ": unsupported version " + std::to_string(version) +
                                       " at offset 4");
  }
  Dims dims;
  dims.x = in.read<std::uint64_t>("X");
  dims.y = in.read<std::uint64_t>("Y");
  dims.z = in.read<std::uint64_t>("Z");
  std::uint64_t xy = 0;
  std::uint64_t xyz = 0;
  if (dims.x == 0 || dims.y == 0 || dims.z == 0 || __builtin_mul_overflow(dims.x, dims.y, &xy) ||
      __builtin_mul_overflow(xy, dims.z, &xyz) || xyz > std::numeric_limits<std::uint64_t>::max() - 7) {
    throw Error(ErrorCode::format, path.string() + ": invalid dimensions at offset 8");
  }
  const std::uint64_t payload = (xyz + 7) / 8;
  // Check the payload length before allocating the grid.
  const auto here = f.tellg();
  f.seekg(0, std::ios::end);
  const auto end = f.tellg();
  f.seekg(here);
  if (here < 0 || end < 0 || static_cast<std::uint64_t>(end - here) < payload) {
    throw Error(ErrorCode::format, path.string() + ": truncated flag payload at offset " +
                                       std::to_string(static_cast<std::uint64_t>(std::max<std::streamoff>(end, 0))) +
                                       ", expected " + std::to_string(payload) + " bytes after offset " +
                                       std::to_string(in.offset()));
  }
  if (static_cast<std::uint64_t>(end - here) > payload) {
    throw Error(ErrorCode::format, path.string() + ": trailing bytes after offset " +
                                       std::to_string(in.offset() + payload));
  }
  std::vector<unsigned char> bits(payload);
  in.read_bytes(bits.data(), bits.size(), "flags");
  VoxelGrid grid(dims, CellType::solid);
  for (std::uint64_t i = 0; i < xyz; ++i) {
    if ((bits[i / 8] >> (i % 8)) & 1u) {
      grid.set(i, CellType::fluid);
    }
  }
  return grid;
}

} // namespace sparselbm
