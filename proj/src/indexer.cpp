#include "sparselbm/indexer.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>
#include <string>

#include "sparselbm/error.hpp"
#include "sparselbm/ranks.hpp"

namespace sparselbm {

std::ostream& operator<<(std::ostream& os, const IncellInfo& ici) {
  os << "{in=" << ici.incell << ",out=";
  if (ici.outcell == kSentinelEnd) {
    os << "END";
  } else {
    os << ici.outcell;
  }
  os << ",Nf=" << ici.fluid_count << ",rank=" << ici.owner_rank;
  if (ici.start) {
    os << ",Ic=" << *ici.start;
  }
  return os << '}';
}

namespace {

struct LocalCell {
  std::uint64_t index;
  Coord coord;
};

/// Cells of `box` sorted by their scheme index.
std::vector<LocalCell> cells_in_index_order(const VoxelGrid& grid, const NumberingScheme& scheme,
                                            const RankBox& box) {
  std::vector<LocalCell> cells;
  cells.reserve(box.volume());
  for (std::uint64_t z = box.lo.z; z < box.hi.z; ++z) {
    for (std::uint64_t y = box.lo.y; y < box.hi.y; ++y) {
      for (std::uint64_t x = box.lo.x; x < box.hi.x; ++x) {
        cells.push_back({scheme.index_of({x, y, z}, grid.dims()), {x, y, z}});
      }
    }
  }
  std::sort(cells.begin(), cells.end(), [](const LocalCell& a, const LocalCell& b) { return a.index < b.index; });
  return cells;
}

} // namespace

std::vector<IncellInfo> find_runs(const VoxelGrid& grid, const NumberingScheme& scheme, const RankBox& box,
                                  std::span<const RankBox> all_boxes) {
  if (std::find(all_boxes.begin(), all_boxes.end(), box) == all_boxes.end()) {
    throw Error(ErrorCode::domain, "box of rank " + std::to_string(box.rank) + " is not part of the decomposition");
  }
  const Dims& dims = grid.dims();
  const std::vector<LocalCell> cells = cells_in_index_order(grid, scheme, box);
  std::vector<IncellInfo> runs;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    // A cell continues the current run iff no existing cell lies between it
    // and its local predecessor; any such cell belongs to another rank.
    const bool continues = k > 0 && scheme.next_existing(cells[k - 1].index + 1, dims) == cells[k].index;
    if (!continues) {
      if (!runs.empty()) {
        runs.back().outcell = scheme.next_existing(cells[k - 1].index + 1, dims).value_or(kSentinelEnd);
      }
      runs.push_back({cells[k].index, kSentinelEnd, 0, box.rank, std::nullopt});
    }
    if (grid.is_fluid(cells[k].coord)) {
      ++runs.back().fluid_count;
    }
  }
  if (!runs.empty()) {
    runs.back().outcell = scheme.next_existing(cells.back().index + 1, dims).value_or(kSentinelEnd);
  }
  return runs;
}

RankTree build_rank_tree(std::uint32_t ranks) {
  if (ranks == 0) {
    throw Error(ErrorCode::parameter, "rank tree needs at least one rank");
  }
  RankTree tree;
  tree.ranks = ranks;
  std::vector<std::uint32_t> nodes(ranks);
  std::iota(nodes.begin(), nodes.end(), 0u);
  while (nodes.size() > 1) {
    std::vector<RankGroup> level;
    std::vector<std::uint32_t> masters;
    for (std::size_t i = 0; i < nodes.size(); i += 8) {
      RankGroup g;
      g.members.assign(nodes.begin() + static_cast<std::ptrdiff_t>(i),
                       nodes.begin() + static_cast<std::ptrdiff_t>(std::min(i + 8, nodes.size())));
      g.master = g.members.front();
      masters.push_back(g.master);
      level.push_back(std::move(g));
    }
    tree.levels.push_back(std::move(level));
    nodes = std::move(masters);
  }
  return tree;
}

namespace {

void check_run(const IncellInfo& r) {
  if (r.incell >= r.outcell) {
    throw Error(ErrorCode::protocol, "run with incell " + std::to_string(r.incell) + " does not precede its outcell");
  }
}

} // namespace

std::vector<IncellInfo> merge_runs(std::span<const IncellInfo> runs, std::uint32_t master) {
  std::vector<IncellInfo> sorted(runs.begin(), runs.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const IncellInfo& a, const IncellInfo& b) { return a.incell < b.incell; });
  std::vector<IncellInfo> merged;
  merged.reserve(sorted.size());
  for (IncellInfo r : sorted) {
    check_run(r);
    r.owner_rank = master;
    r.start.reset();
    if (!merged.empty()) {
      IncellInfo& last = merged.back();
      if (last.outcell > r.incell) {
        throw Error(ErrorCode::protocol, "runs starting at " + std::to_string(last.incell) + " and " +
                                             std::to_string(r.incell) + " overlap");
      }
      if (last.outcell == r.incell) {
        last.outcell = r.outcell;
        last.fluid_count += r.fluid_count;
        continue;
      }
    }
    merged.push_back(r);
  }
  return merged;
}

void assign_root_starts(std::vector<IncellInfo>& merged) {
  std::uint64_t next = 1;
  for (IncellInfo& r : merged) {
    r.start = next;
    next += r.fluid_count;
  }
}

void map_back_starts(std::span<const IncellInfo> merged, std::vector<IncellInfo>& originals) {
  std::vector<std::size_t> order(originals.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return originals[a].incell < originals[b].incell; });
  std::size_t j = 0;
  std::uint64_t offset = 0;
  for (std::size_t k : order) {
    IncellInfo& r = originals[k];
    while (j < merged.size() && merged[j].outcell <= r.incell) {
      ++j;
      offset = 0;
    }
    if (j == merged.size() || merged[j].incell > r.incell || r.outcell > merged[j].outcell) {
      throw Error(ErrorCode::protocol, "run starting at " + std::to_string(r.incell) + " is not covered by a merged run");
    }
    if (!merged[j].start) {
      throw Error(ErrorCode::protocol, "merged run starting at " + std::to_string(merged[j].incell) + " has no start");
    }
    r.start = *merged[j].start + offset;
    offset += r.fluid_count;
  }
}

namespace {

/// What a sibling master keeps from the upward pass for the downward one.
struct LevelRecord {
  std::vector<IncellInfo> received;  // A_l, ordered by origin rank then incell
  std::vector<IncellInfo> merged;    // B_l
};

struct RankState {
  std::vector<IncellInfo> current;
  std::map<std::size_t, LevelRecord> levels;
  std::map<std::size_t, std::vector<IncellInfo>> sent;  // list contributed at each level
};

void trace_message(std::ostream* trace, std::mutex& lock, const char* dir, std::size_t level, std::uint32_t from,
                   std::uint32_t to, std::span<const IncellInfo> list) {
  if (trace == nullptr) {
    return;
  }
  std::lock_guard guard(lock);
  *trace << dir << " level " << level << ' ' << from << " -> " << to << ':';
  for (const IncellInfo& r : list) {
    *trace << ' ' << r;
  }
  *trace << '\n';
}

} // namespace

std::vector<std::vector<IncellInfo>> octree_reduce(std::vector<std::vector<IncellInfo>> per_rank,
                                                   const RankTree& tree, const ReduceOptions& options) {
  if (per_rank.size() != tree.ranks) {
    throw Error(ErrorCode::protocol, "expected run lists from " + std::to_string(tree.ranks) + " ranks, got " +
                                         std::to_string(per_rank.size()));
  }
  const std::uint32_t ranks = tree.ranks;
  std::vector<RankState> state(ranks);
  for (std::uint32_t r = 0; r < ranks; ++r) {
    for (const IncellInfo& ici : per_rank[r]) {
      check_run(ici);
      if (ici.owner_rank != r) {
        throw Error(ErrorCode::protocol, "rank " + std::to_string(r) + " holds a run owned by rank " +
                                             std::to_string(ici.owner_rank));
      }
    }
    state[r].current = std::move(per_rank[r]);
  }

  // Group membership per level: the master a node reports to.
  std::vector<std::vector<std::uint32_t>> parent(tree.height(), std::vector<std::uint32_t>(ranks, ranks));
  std::vector<std::vector<bool>> is_master(tree.height(), std::vector<bool>(ranks, false));
  for (std::size_t l = 0; l < tree.height(); ++l) {
    for (const RankGroup& g : tree.levels[l]) {
      is_master[l][g.master] = true;
      for (std::uint32_t m : g.members) {
        parent[l][m] = g.master;
      }
    }
  }

  std::mutex trace_lock;
  Mailboxes<std::vector<IncellInfo>> mail(ranks);

  // Upward: members ship their list to the sibling master, which merges.
  for (std::size_t l = 0; l < tree.height(); ++l) {
    for_each_rank(ranks, options.execution, [&](std::uint32_t r) {
      const std::uint32_t to = parent[l][r];
      if (to != ranks) {
        state[r].sent[l] = state[r].current;
      }
      if (to != ranks && to != r) {
        trace_message(options.trace, trace_lock, "up", l + 1, r, to, state[r].current);
        mail.send(r, to, state[r].current);
      }
    });
    for_each_rank(ranks, options.execution, [&](std::uint32_t r) {
      if (!is_master[l][r]) {
        return;
      }
      auto inbox = mail.drain(r);
      inbox.push_back({r, std::move(state[r].current)});
      std::sort(inbox.begin(), inbox.end(), [](const auto& a, const auto& b) { return a.from < b.from; });
      LevelRecord rec;
      for (auto& env : inbox) {
        for (IncellInfo& ici : env.payload) {
          if (ici.owner_rank != env.from) {
            throw Error(ErrorCode::protocol, "rank " + std::to_string(env.from) + " sent a run owned by rank " +
                                                 std::to_string(ici.owner_rank));
          }
          rec.received.push_back(ici);
        }
      }
      rec.merged = merge_runs(rec.received, r);
      state[r].current = rec.merged;
      state[r].levels[l] = std::move(rec);
    });
  }

  const std::uint32_t root = tree.root();
  if (tree.height() == 0) {
    std::vector<IncellInfo>& list = state[root].current;
    std::sort(list.begin(), list.end(), [](const IncellInfo& a, const IncellInfo& b) { return a.incell < b.incell; });
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (list[i - 1].outcell > list[i].incell) {
        throw Error(ErrorCode::protocol, "runs starting at " + std::to_string(list[i - 1].incell) + " and " +
                                             std::to_string(list[i].incell) + " overlap");
      }
    }
  }
  assign_root_starts(state[root].current);

  // Downward: masters map starts back onto the received lists and return
  // each origin rank its chunk, which replaces that rank's list.
  for (std::size_t l = tree.height(); l-- > 0;) {
    for_each_rank(ranks, options.execution, [&](std::uint32_t r) {
      if (!is_master[l][r]) {
        return;
      }
      LevelRecord& rec = state[r].levels.at(l);
      rec.merged = state[r].current;
      map_back_starts(rec.merged, rec.received);
      // received is ordered by origin rank, so each origin's entries are one
      // contiguous chunk.
      auto it = rec.received.begin();
      while (it != rec.received.end()) {
        const std::uint32_t origin = it->owner_rank;
        auto end = std::find_if(it, rec.received.end(), [&](const IncellInfo& x) { return x.owner_rank != origin; });
        std::vector<IncellInfo> chunk(it, end);
        trace_message(options.trace, trace_lock, "down", l + 1, r, origin, chunk);
        mail.send(r, origin, std::move(chunk));
        it = end;
      }
    });
    for_each_rank(ranks, options.execution, [&](std::uint32_t r) {
      if (parent[l][r] == ranks) {
        return;
      }
      auto inbox = mail.drain(r);
      std::vector<IncellInfo> received;
      for (auto& env : inbox) {
        received.insert(received.end(), env.payload.begin(), env.payload.end());
      }
      const std::vector<IncellInfo>& mine = state[r].sent.at(l);
      if (received.size() != mine.size()) {
        throw Error(ErrorCode::protocol, "rank " + std::to_string(r) + " got " + std::to_string(received.size()) +
                                             " runs back, sent " + std::to_string(mine.size()));
      }
      for (std::size_t i = 0; i < mine.size(); ++i) {
        if (received[i].incell != mine[i].incell || received[i].fluid_count != mine[i].fluid_count) {
          throw Error(ErrorCode::protocol, "rank " + std::to_string(r) + " got back a run it did not send");
        }
      }
      state[r].current = std::move(received);
    });
  }

  std::vector<std::vector<IncellInfo>> out(ranks);
  for (std::uint32_t r = 0; r < ranks; ++r) {
    out[r] = std::move(state[r].current);
  }
  return out;
}

BoxIndexMap assign_contiguous(const VoxelGrid& grid, const NumberingScheme& scheme, const RankBox& box,
                              std::span<const IncellInfo> runs) {
  BoxIndexMap map{box, std::vector<std::uint64_t>(box.volume(), 0)};
  const std::vector<LocalCell> cells = cells_in_index_order(grid, scheme, box);
  std::vector<IncellInfo> sorted(runs.begin(), runs.end());
  std::sort(sorted.begin(), sorted.end(), [](const IncellInfo& a, const IncellInfo& b) { return a.incell < b.incell; });

  std::size_t k = 0;
  for (const IncellInfo& r : sorted) {
    if (!r.start) {
      throw Error(ErrorCode::protocol, "run starting at " + std::to_string(r.incell) + " has no contiguous start");
    }
    if (k < cells.size() && cells[k].index < r.incell) {
      break;
    }
    std::uint64_t next = *r.start;
    std::uint64_t fluid = 0;
    for (; k < cells.size() && cells[k].index < r.outcell; ++k) {
      if (grid.is_fluid(cells[k].coord)) {
        map.index[linear_index({cells[k].coord.x - box.lo.x, cells[k].coord.y - box.lo.y,
                                cells[k].coord.z - box.lo.z},
                               box.extent())] = next++;
        ++fluid;
      }
    }
    if (fluid != r.fluid_count) {
      throw Error(ErrorCode::protocol, "run starting at " + std::to_string(r.incell) + " covers " +
                                           std::to_string(fluid) + " fluid cells, expected " +
                                           std::to_string(r.fluid_count));
    }
  }
  if (k != cells.size()) {
    throw Error(ErrorCode::protocol, "rank " + std::to_string(box.rank) + " has cells outside its runs");
  }
  return map;
}

std::vector<std::uint64_t> serial_oracle(const VoxelGrid& grid, const NumberingScheme& scheme) {
  const Dims& d = grid.dims();
  std::vector<std::pair<std::uint64_t, std::uint64_t>> order;  // (index, linear)
  order.reserve(grid.cell_count());
  for (std::uint64_t i = 0; i < grid.cell_count(); ++i) {
    order.emplace_back(scheme.index_of(from_linear(i, d), d), i);
  }
  std::sort(order.begin(), order.end());
  std::vector<std::uint64_t> ic(grid.cell_count(), 0);
  std::uint64_t next = 1;
  for (const auto& [index, linear] : order) {
    if (grid.is_fluid(linear)) {
      ic[linear] = next++;
    }
  }
  return ic;
}

std::vector<std::uint64_t> distributed_contiguous_index(const VoxelGrid& grid, const NumberingScheme& scheme,
                                                        std::uint32_t ranks, const ReduceOptions& options) {
  const std::vector<RankBox> boxes = decompose_ranks(grid.dims(), ranks);
  std::vector<std::vector<IncellInfo>> runs(ranks);
  for_each_rank(ranks, options.execution,
                [&](std::uint32_t r) { runs[r] = find_runs(grid, scheme, boxes[r], boxes); });
  const auto reduced = octree_reduce(std::move(runs), build_rank_tree(ranks), options);
  std::vector<std::uint64_t> ic(grid.cell_count(), 0);
  for_each_rank(ranks, options.execution, [&](std::uint32_t r) {
    const BoxIndexMap map = assign_contiguous(grid, scheme, boxes[r], reduced[r]);
    const RankBox& b = boxes[r];
    for (std::uint64_t z = b.lo.z; z < b.hi.z; ++z) {
      for (std::uint64_t y = b.lo.y; y < b.hi.y; ++y) {
        for (std::uint64_t x = b.lo.x; x < b.hi.x; ++x) {
          ic[linear_index({x, y, z}, grid.dims())] = map.at({x, y, z});
        }
      }
    }
  });
  return ic;
}

} // namespace sparselbm
