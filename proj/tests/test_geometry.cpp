#include <doctest.h>

#include <fstream>
#include <set>

#include "sparselbm/error.hpp"
#include "sparselbm/geometry.hpp"
#include "test_support.hpp"

using namespace sparselbm;
using sparselbm::testing::TempDir;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::io;
}

} // namespace

TEST_CASE("channel dims and interior count") {
  const VoxelGrid g = make_channel(4);
  CHECK(g.dims() == Dims{20, 4, 4});
  CHECK(g.fluid_count() == 80);
  CHECK(make_channel(3).fluid_count() == 15);
  for (std::uint64_t d : {5u, 8u, 13u}) {
    CHECK(make_channel(d).fluid_count() == 5 * d * (d - 2) * (d - 2));
  }
  CHECK_FALSE(g.is_fluid(Coord{0, 0, 1}));
  CHECK(g.is_fluid(Coord{0, 1, 1}));
  CHECK(code_of([] { (void)make_channel(2); }) == ErrorCode::invalid_geometry);
}

TEST_CASE("large channel is nearly all fluid") {
  const VoxelGrid g = make_channel(100);
  const double frac = static_cast<double>(g.fluid_count()) / static_cast<double>(g.cell_count());
  CHECK(frac == doctest::Approx(0.9604).epsilon(1e-12));
}

TEST_CASE("packing is deterministic and porous") {
  const VoxelGrid a = make_packing(24, 1);
  const VoxelGrid b = make_packing(24, 1);
  CHECK(a == b);
  CHECK(a.dims() == Dims{120, 24, 24});
  const double frac = static_cast<double>(a.fluid_count()) / static_cast<double>(a.cell_count());
  CHECK(frac > 0.15);
  CHECK(frac < 0.60);
  CHECK_FALSE(a.is_fluid(Coord{0, 0, 0}));
  CHECK(make_packing(24, 2) != a);
  CHECK(code_of([] { (void)make_packing(11, 1); }) == ErrorCode::invalid_geometry);
}

TEST_CASE("packing never has fluid outside the tube") {
  const VoxelGrid g = make_packing(30, 7);
  const double c = 15.0;
  for (std::uint64_t z = 0; z < 30; ++z) {
    for (std::uint64_t y = 0; y < 30; ++y) {
      const double dy = static_cast<double>(y) + 0.5 - c;
      const double dz = static_cast<double>(z) + 0.5 - c;
      if (dy * dy + dz * dz > c * c) {
        for (std::uint64_t x = 0; x < 150; ++x) {
          REQUIRE_FALSE(g.is_fluid(Coord{x, y, z}));
        }
      }
    }
  }
}

TEST_CASE("plate channel") {
  const VoxelGrid g = make_plate_channel({2, 5, 3});
  CHECK(g.fluid_count() == 2 * 3 * 3);
  CHECK_FALSE(g.is_fluid(Coord{1, 4, 2}));
  CHECK(g.is_fluid(Coord{1, 3, 2}));
}

TEST_CASE("zero extent grid is rejected") {
  CHECK(code_of([] { VoxelGrid g(Dims{0, 3, 3}); }) == ErrorCode::invalid_geometry);
}

TEST_CASE("decompose perfect cube") {
  const auto boxes = decompose_ranks({8, 8, 8}, 8);
  REQUIRE(boxes.size() == 8);
  for (const RankBox& b : boxes) {
    CHECK(b.extent() == Dims{4, 4, 4});
  }
  CHECK(boxes[1].lo == Coord{4, 0, 0});
  CHECK(boxes[2].lo == Coord{0, 4, 0});
  CHECK(boxes[4].lo == Coord{0, 0, 4});
}

TEST_CASE("decompose slabs with remainder") {
  CHECK(choose_rank_grid({10, 4, 4}, 3) == RankGrid{3, 1, 1});
  const auto boxes = decompose_ranks({10, 4, 4}, 3);
  REQUIRE(boxes.size() == 3);
  CHECK(boxes[0].extent().x == 4);
  CHECK(boxes[1].extent().x == 3);
  CHECK(boxes[2].extent().x == 3);
  CHECK(boxes[2].hi == Coord{10, 4, 4});
}

TEST_CASE("decompose identity") {
  const auto boxes = decompose_ranks({5, 1, 1}, 1);
  REQUIRE(boxes.size() == 1);
  CHECK(boxes[0].lo == Coord{0, 0, 0});
  CHECK(boxes[0].hi == Coord{5, 1, 1});
}

TEST_CASE("decompose errors") {
  CHECK(code_of([] { (void)decompose_ranks({2, 2, 1}, 5); }) == ErrorCode::invalid_decomposition);
  CHECK(code_of([] { (void)decompose_ranks({2, 2, 2}, 0); }) == ErrorCode::invalid_decomposition);
  // 7 fits in no axis of 4x4x4 even though 7 < 64 cells.
  CHECK(code_of([] { (void)decompose_ranks({4, 4, 4}, 7); }) == ErrorCode::invalid_decomposition);
}

TEST_CASE("decompositions tile the box exactly once") {
  const std::vector<Dims> shapes{{13, 9, 7}, {32, 5, 17}, {6, 6, 6}, {64, 3, 2}};
  for (const Dims& d : shapes) {
    for (std::uint32_t p = 1; p <= 64; ++p) {
      std::vector<RankBox> boxes;
      try {
        boxes = decompose_ranks(d, p);
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_decomposition);
        continue;
      }
      REQUIRE(boxes.size() == p);
      std::vector<int> hits(d.volume(), 0);
      for (std::uint32_t r = 0; r < p; ++r) {
        CHECK(boxes[r].rank == r);
        CHECK(boxes[r].volume() > 0);
        for (std::uint64_t z = boxes[r].lo.z; z < boxes[r].hi.z; ++z) {
          for (std::uint64_t y = boxes[r].lo.y; y < boxes[r].hi.y; ++y) {
            for (std::uint64_t x = boxes[r].lo.x; x < boxes[r].hi.x; ++x) {
              ++hits[linear_index({x, y, z}, d)];
              REQUIRE(owner_of(boxes, {x, y, z}) == r);
            }
          }
        }
      }
      for (int h : hits) {
        REQUIRE(h == 1);
      }
    }
  }
}

TEST_CASE("voxel file round trip") {
  TempDir dir;
  const VoxelGrid g = make_channel(4);
  voxel_save(dir / "c.voxl", g);
  CHECK(voxel_load(dir / "c.voxl") == g);

  const VoxelGrid r = sparselbm::testing::random_fill({7, 3, 5}, 11, 0.5);
  voxel_save(dir / "r.voxl", r);
  CHECK(voxel_load(dir / "r.voxl") == r);
}

TEST_CASE("voxel file corruption") {
  TempDir dir;
  voxel_save(dir / "c.voxl", make_channel(4));
  std::string bytes = sparselbm::testing::slurp(dir / "c.voxl");

  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream(dir / name, std::ios::binary) << content;
    return dir / name;
  };

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  const auto p1 = write("magic.voxl", bad_magic);
  CHECK(code_of([&] { (void)voxel_load(p1); }) == ErrorCode::format);

  const auto p2 = write("short.voxl", bytes.substr(0, bytes.size() - 3));
  try {
    (void)voxel_load(p2);
    FAIL("expected truncation error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::format);
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }

  const auto p3 = write("missing.voxl", "");
  CHECK(code_of([&] { (void)voxel_load(p3); }) == ErrorCode::format);
  CHECK(code_of([&] { (void)voxel_load(dir / "nope.voxl"); }) == ErrorCode::io);
}
