#include <doctest.h>

#include <sstream>

#include "sparselbm/error.hpp"
#include "sparselbm/indexer.hpp"
#include "test_support.hpp"

using namespace sparselbm;

namespace {

IncellInfo ici(std::uint64_t in, std::uint64_t out, std::uint64_t nf, std::uint32_t rank) {
  return {in, out, nf, rank, std::nullopt};
}

VoxelGrid line4(bool hole) {
  VoxelGrid g({4, 1, 1}, CellType::fluid);
  if (hole) {
    g.set(Coord{1, 0, 0}, CellType::solid);
  }
  return g;
}

const std::vector<RankBox> kTwoHalves{{0, {0, 0, 0}, {2, 1, 1}}, {1, {2, 0, 0}, {4, 1, 1}}};

} // namespace

TEST_CASE("runs of a split line") {
  const VoxelGrid g = line4(false);
  const auto lex = NumberingScheme::lex(1);
  CHECK(find_runs(g, lex, kTwoHalves[0], kTwoHalves) == std::vector{ici(0, 2, 2, 0)});
  CHECK(find_runs(g, lex, kTwoHalves[1], kTwoHalves) == std::vector{ici(2, kSentinelEnd, 2, 1)});

  const VoxelGrid h = line4(true);
  CHECK(find_runs(h, lex, kTwoHalves[0], kTwoHalves) == std::vector{ici(0, 2, 1, 0)});
}

TEST_CASE("single rank has one run") {
  const VoxelGrid g = sparselbm::testing::random_fill({6, 5, 7}, 3, 0.4);
  const auto boxes = decompose_ranks(g.dims(), 1);
  for (const auto& s : {NumberingScheme::lex(1), NumberingScheme::lex(4), NumberingScheme::morton(2)}) {
    const auto runs = find_runs(g, s, boxes[0], boxes);
    REQUIRE(runs.size() == 1);
    CHECK(runs[0].incell == 0);
    CHECK(runs[0].outcell == kSentinelEnd);
    CHECK(runs[0].fluid_count == g.fluid_count());
  }
}

TEST_CASE("runs agree with a global scan") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const VoxelGrid g = sparselbm::testing::random_grid(seed, 3, 11);
    for (const auto& s : {NumberingScheme::lex(1), NumberingScheme::lex(3), NumberingScheme::morton(1),
                          NumberingScheme::morton(2)}) {
      for (std::uint32_t p : {2u, 3u, 4u, 8u}) {
        std::vector<RankBox> boxes;
        try {
          boxes = decompose_ranks(g.dims(), p);
        } catch (const Error&) {
          continue;
        }
        const auto expected = sparselbm::testing::runs_by_scan(g, s, boxes);
        for (const RankBox& b : boxes) {
          REQUIRE(find_runs(g, s, b, boxes) == expected[b.rank]);
        }
      }
    }
  }
}

TEST_CASE("rank tree shapes") {
  const RankTree one = build_rank_tree(1);
  CHECK(one.height() == 0);
  CHECK(one.root() == 0);

  const RankTree eight = build_rank_tree(8);
  REQUIRE(eight.height() == 1);
  REQUIRE(eight.levels[0].size() == 1);
  CHECK(eight.levels[0][0].master == 0);
  CHECK(eight.levels[0][0].members.size() == 8);

  const RankTree t = build_rank_tree(13);
  REQUIRE(t.height() == 2);
  REQUIRE(t.levels[0].size() == 2);
  CHECK(t.levels[0][0].master == 0);
  CHECK(t.levels[0][0].members == std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5, 6, 7});
  CHECK(t.levels[0][1].master == 8);
  CHECK(t.levels[0][1].members == std::vector<std::uint32_t>{8, 9, 10, 11, 12});
  REQUIRE(t.levels[1].size() == 1);
  CHECK(t.levels[1][0].members == std::vector<std::uint32_t>{0, 8});

  const RankTree big = build_rank_tree(100);
  CHECK(big.height() == 3);
  CHECK(big.levels[1].size() == 2);
}

TEST_CASE("merge and prefix on hand examples") {
  const std::vector<IncellInfo> two{ici(0, 2, 2, 0), ici(2, kSentinelEnd, 2, 1)};
  auto merged = merge_runs(two, 0);
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].incell == 0);
  CHECK(merged[0].outcell == kSentinelEnd);
  CHECK(merged[0].fluid_count == 4);
  assign_root_starts(merged);
  CHECK(merged[0].start == std::optional<std::uint64_t>{1});
  std::vector<IncellInfo> originals = two;
  map_back_starts(merged, originals);
  CHECK(originals[0].start == std::optional<std::uint64_t>{1});
  CHECK(originals[1].start == std::optional<std::uint64_t>{3});

  std::vector<IncellInfo> gaps{ici(0, 3, 5, 0), ici(4, 6, 0, 0), ici(9, kSentinelEnd, 3, 0)};
  auto m = merge_runs(gaps, 0);
  REQUIRE(m.size() == 3);
  assign_root_starts(m);
  CHECK(m[0].start == std::optional<std::uint64_t>{1});
  CHECK(m[1].start == std::optional<std::uint64_t>{6});
  CHECK(m[2].start == std::optional<std::uint64_t>{6});
}

TEST_CASE("octree reduction on hand examples") {
  auto out = octree_reduce({{ici(0, 2, 2, 0)}, {ici(2, kSentinelEnd, 2, 1)}}, build_rank_tree(2));
  CHECK(out[0][0].start == std::optional<std::uint64_t>{1});
  CHECK(out[1][0].start == std::optional<std::uint64_t>{3});

  auto single = octree_reduce({{ici(0, kSentinelEnd, 9, 0)}}, build_rank_tree(1));
  CHECK(single[0][0].start == std::optional<std::uint64_t>{1});

  auto three = octree_reduce({{ici(0, 3, 5, 0)}, {ici(4, 6, 0, 1)}, {ici(9, kSentinelEnd, 3, 2)}},
                             build_rank_tree(3));
  CHECK(three[0][0].start == std::optional<std::uint64_t>{1});
  CHECK(three[1][0].start == std::optional<std::uint64_t>{6});
  CHECK(three[2][0].start == std::optional<std::uint64_t>{6});
}

TEST_CASE("overlapping runs are a protocol error") {
  try {
    (void)octree_reduce({{ici(0, 5, 2, 0)}, {ici(3, kSentinelEnd, 2, 1)}}, build_rank_tree(2));
    FAIL("expected protocol error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::protocol);
  }
  try {
    (void)octree_reduce({{ici(0, 5, 2, 1)}, {}}, build_rank_tree(2));
    FAIL("expected protocol error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::protocol);
  }
}

TEST_CASE("downward mapping is idempotent") {
  const VoxelGrid g = sparselbm::testing::random_fill({9, 8, 7}, 5, 0.6);
  const auto s = NumberingScheme::morton(1);
  const auto boxes = decompose_ranks(g.dims(), 8);
  std::vector<IncellInfo> all;
  for (const RankBox& b : boxes) {
    const auto runs = find_runs(g, s, b, boxes);
    all.insert(all.end(), runs.begin(), runs.end());
  }
  auto merged = merge_runs(all, 0);
  assign_root_starts(merged);
  std::vector<IncellInfo> once = all;
  map_back_starts(merged, once);
  std::vector<IncellInfo> twice = once;
  map_back_starts(merged, twice);
  CHECK(once == twice);

  std::uint64_t total = 0;
  for (const auto& m : merged) {
    total += m.fluid_count;
  }
  CHECK(total == g.fluid_count());
}

TEST_CASE("threaded reduction matches sequential and traces") {
  const VoxelGrid g = sparselbm::testing::random_fill({13, 6, 5}, 9, 0.5);
  const auto s = NumberingScheme::lex(4);
  std::ostringstream trace;
  const auto seq = distributed_contiguous_index(g, s, 13, {Execution::sequential, &trace});
  const auto thr = distributed_contiguous_index(g, s, 13, {Execution::threaded, nullptr});
  CHECK(seq == thr);
  CHECK(seq == serial_oracle(g, s));
  CHECK(trace.str().find("up") != std::string::npos);
  CHECK(trace.str().find("down") != std::string::npos);
}

TEST_CASE("contiguous indices on a line") {
  const auto lex = NumberingScheme::lex(1);
  for (std::uint32_t p : {1u, 2u, 4u}) {
    CHECK(distributed_contiguous_index(line4(false), lex, p) == std::vector<std::uint64_t>{1, 2, 3, 4});
    CHECK(distributed_contiguous_index(line4(true), lex, p) == std::vector<std::uint64_t>{1, 0, 2, 3});
  }
}

TEST_CASE("assign_contiguous needs starts") {
  const VoxelGrid g = line4(false);
  try {
    (void)assign_contiguous(g, NumberingScheme::lex(1), kTwoHalves[0], std::vector{ici(0, 2, 2, 0)});
    FAIL("expected protocol error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::protocol);
  }
  IncellInfo r = ici(0, 2, 2, 0);
  r.start = 1;
  const BoxIndexMap m = assign_contiguous(g, NumberingScheme::lex(1), kTwoHalves[0], std::vector{r});
  CHECK(m.at({1, 0, 0}) == 2);
}

TEST_CASE("oracle basics") {
  const VoxelGrid solid({5, 4, 3}, CellType::solid);
  for (std::uint64_t v : serial_oracle(solid, NumberingScheme::morton(2))) {
    REQUIRE(v == 0);
  }
  const VoxelGrid full({8, 8, 8}, CellType::fluid);
  const auto s = NumberingScheme::morton(1);
  const auto ic = serial_oracle(full, s);
  for (std::uint64_t i = 0; i < full.dims().volume(); ++i) {
    REQUIRE(ic[i] == s.index_of(from_linear(i, full.dims()), full.dims()) + 1);
  }
}

TEST_CASE("channel matches the oracle for small rank counts") {
  const VoxelGrid g = make_channel(4);
  for (std::uint64_t b : {1u, 4u}) {
    const auto s = NumberingScheme::lex(b);
    const auto expected = serial_oracle(g, s);
    for (std::uint32_t p : {1u, 2u, 3u, 8u}) {
      CHECK(distributed_contiguous_index(g, s, p) == expected);
    }
  }
}

TEST_CASE("fluid order follows index order") {
  const VoxelGrid g = sparselbm::testing::random_fill({10, 9, 8}, 21, 0.5);
  for (const auto& s : {NumberingScheme::lex(3), NumberingScheme::morton(2)}) {
    const auto ic = distributed_contiguous_index(g, s, 7 < g.dims().x ? 7 : 1);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
    for (std::uint64_t i = 0; i < ic.size(); ++i) {
      if (ic[i] != 0) {
        pairs.emplace_back(s.index_of(from_linear(i, g.dims()), g.dims()), ic[i]);
      }
    }
    std::sort(pairs.begin(), pairs.end());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      REQUIRE(pairs[k].second == k + 1);
    }
  }
}
