#include "sparselbm/preprocess.hpp"

#include <algorithm>

#include "sparselbm/indexer.hpp"
#include "sparselbm/ranks.hpp"

namespace sparselbm {

SparseDomain preprocess(const VoxelGrid& grid, const NumberingScheme& scheme, const PreprocessOptions& options) {
  const std::uint32_t ranks = options.ranks;
  const std::vector<RankBox> boxes = decompose_ranks(grid.dims(), ranks);

  std::vector<std::vector<IncellInfo>> runs(ranks);
  for_each_rank(ranks, options.execution,
                [&](std::uint32_t r) { runs[r] = find_runs(grid, scheme, boxes[r], boxes); });

  const auto reduced =
      octree_reduce(std::move(runs), build_rank_tree(ranks), ReduceOptions{options.execution, options.trace});

  std::vector<RankLocal> locals(ranks);
  for_each_rank(ranks, options.execution, [&](std::uint32_t r) {
    locals[r] = RankLocal{boxes[r], assign_contiguous(grid, scheme, boxes[r], reduced[r])};
  });

  const std::vector<RankView> views = halo_exchange(locals, grid.dims(), options.periodic, options.execution);

  std::vector<std::vector<SparseRecord>> per_rank(ranks);
  for_each_rank(ranks, options.execution, [&](std::uint32_t r) { per_rank[r] = build_adjacency(views[r]); });

  SparseDomain out;
  for (auto& part : per_rank) {
    out.records.insert(out.records.end(), part.begin(), part.end());
  }
  std::sort(out.records.begin(), out.records.end(),
            [](const SparseRecord& a, const SparseRecord& b) { return a.ic < b.ic; });
  out.header.dims = grid.dims();
  out.header.fluid_cells = out.records.size();
  out.header.scheme = scheme.text();
  out.header.periodic = options.periodic;
  out.header.partition_starts = options.partition_starts;
  return out;
}

SparseHeader preprocess_to_file(const VoxelGrid& grid, const NumberingScheme& scheme,
                                const std::filesystem::path& out, const PreprocessOptions& options) {
  SparseDomain domain = preprocess(grid, scheme, options);
  write_sparse(out, std::move(domain.records), domain.header, options.ranks);
  return domain.header;
}

} // namespace sparselbm
