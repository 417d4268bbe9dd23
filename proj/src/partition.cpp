#include "sparselbm/partition.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <string>

#include "sparselbm/error.hpp"

namespace sparselbm {

std::uint32_t PartitionAssignment::partition_of(std::uint64_t ic) const noexcept {
  const auto it = std::upper_bound(boundaries.begin(), boundaries.end(), ic);
  return static_cast<std::uint32_t>(it - boundaries.begin() - 1);
}

PartitionAssignment chunk_ranges(std::uint64_t fluid_cells, std::uint64_t parts) {
  if (parts == 0) {
    throw Error(ErrorCode::parameter, "partition count must be >= 1");
  }
  if (parts > fluid_cells) {
    throw Error(ErrorCode::too_many_processes, std::to_string(parts) + " partitions for " +
                                                   std::to_string(fluid_cells) + " fluid cells");
  }
  const std::uint64_t q = fluid_cells / parts;
  const std::uint64_t rem = fluid_cells % parts;
  PartitionAssignment a;
  a.boundaries.reserve(parts + 1);
  for (std::uint64_t p = 0; p <= parts; ++p) {
    a.boundaries.push_back(1 + p * q + std::min(p, rem));
  }
  return a;
}

PartitionAssignment assignment_from_starts(std::span<const std::uint64_t> starts, std::uint64_t fluid_cells) {
  if (starts.empty()) {
    throw Error(ErrorCode::format, "partition start list is empty");
  }
  if (starts.front() != 1) {
    throw Error(ErrorCode::format, "partition start list must begin at 1, begins at " + std::to_string(starts.front()));
  }
  for (std::size_t i = 1; i < starts.size(); ++i) {
    if (starts[i] <= starts[i - 1]) {
      throw Error(ErrorCode::format, "partition start " + std::to_string(i + 1) + " is not increasing");
    }
  }
  if (starts.back() > fluid_cells) {
    throw Error(ErrorCode::format, "partition start " + std::to_string(starts.back()) + " exceeds " +
                                       std::to_string(fluid_cells) + " fluid cells");
  }
  PartitionAssignment a;
  a.boundaries.assign(starts.begin(), starts.end());
  a.boundaries.push_back(fluid_cells + 1);
  return a;
}

PartitionAssignment import_partition_map(const std::filesystem::path& path, std::uint64_t fluid_cells) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::io, "cannot open partition map " + path.string());
  }
  std::vector<std::uint64_t> starts;
  std::string line;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::format, path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc{} || ptr != line.data() + line.size()) {
      fail("'" + line + "' is not an unsigned integer");
    }
    if (starts.empty() && v != 1) {
      fail("first start must be 1, got " + line);
    }
    if (!starts.empty() && v <= starts.back()) {
      fail("start " + line + " is not greater than " + std::to_string(starts.back()));
    }
    if (v > fluid_cells) {
      fail("start " + line + " exceeds " + std::to_string(fluid_cells) + " fluid cells");
    }
    starts.push_back(v);
  }
  if (starts.empty()) {
    line_no = 0;
    fail("no partition starts");
  }
  return assignment_from_starts(starts, fluid_cells);
}

std::uint64_t PartitionStats::total_remote_links() const noexcept {
  std::uint64_t sum = 0;
  for (std::uint64_t v : remote_links) {
    sum += v;
  }
  return sum;
}

std::uint64_t PartitionStats::max_neighbor_count() const noexcept {
  return neighbor_count.empty() ? 0 : *std::max_element(neighbor_count.begin(), neighbor_count.end());
}

PartitionStats partition_stats(std::span<const SparseRecord> records, const PartitionAssignment& assignment) {
  const std::uint64_t nf = assignment.fluid_cells();
  const std::uint32_t parts = assignment.count();
  if (records.size() != nf) {
    throw Error(ErrorCode::data, std::to_string(records.size()) + " records for " + std::to_string(nf) +
                                     " fluid cells");
  }
  PartitionStats stats;
  stats.neighbor_count.assign(parts, 0);
  stats.remote_links.assign(parts, 0);
  stats.fluid_cells.assign(parts, 0);
  std::vector<std::vector<std::uint32_t>> neighbors(parts);
  std::vector<bool> seen(nf + 1, false);
  for (const SparseRecord& r : records) {
    if (r.ic < 1 || r.ic > nf || seen[r.ic]) {
      throw Error(ErrorCode::data, "record index " + std::to_string(r.ic) + " is out of range or repeated");
    }
    seen[r.ic] = true;
    const std::uint32_t p = assignment.partition_of(r.ic);
    ++stats.fluid_cells[p];
    for (std::uint64_t n : r.nbr) {
      if (n == 0) {
        continue;
      }
      if (n > nf) {
        throw Error(ErrorCode::data, "cell " + std::to_string(r.ic) + " links to " + std::to_string(n) +
                                         " beyond " + std::to_string(nf) + " fluid cells");
      }
      const std::uint32_t q = assignment.partition_of(n);
      if (q != p) {
        ++stats.remote_links[p];
        neighbors[p].push_back(q);
      }
    }
  }
  for (std::uint32_t p = 0; p < parts; ++p) {
    auto& v = neighbors[p];
    std::sort(v.begin(), v.end());
    stats.neighbor_count[p] = static_cast<std::uint64_t>(std::unique(v.begin(), v.end()) - v.begin());
  }
  return stats;
}

Histogram neighbor_histogram(const PartitionStats& stats) {
  std::vector<std::uint64_t> counts;
  for (std::uint64_t n : stats.neighbor_count) {
    if (n >= counts.size()) {
      counts.resize(n + 1, 0);
    }
    ++counts[n];
  }
  Histogram h;
  for (std::uint64_t bin = 0; bin < counts.size(); ++bin) {
    if (counts[bin] != 0) {
      h.emplace_back(bin, counts[bin]);
    }
  }
  return h;
}

Histogram remote_link_histogram(const PartitionStats& stats) {
  constexpr std::uint64_t kBins = 64;
  const std::uint64_t max =
      stats.remote_links.empty() ? 0 : *std::max_element(stats.remote_links.begin(), stats.remote_links.end());
  const std::uint64_t width = std::max<std::uint64_t>(1, (max + kBins) / kBins);  // ceil((max + 1) / 64)
  Histogram h;
  for (std::uint64_t b = 0; b < kBins; ++b) {
    h.emplace_back(b * width, 0);
  }
  for (std::uint64_t v : stats.remote_links) {
    ++h[v / width].second;
  }
  return h;
}

namespace {

void write_csv(const std::filesystem::path& path, const Histogram& h) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  }
  out << "bin,count\n";
  for (const auto& [bin, count] : h) {
    out << bin << ',' << count << '\n';
  }
  if (!out) {
    throw Error(ErrorCode::io, "write failed for " + path.string());
  }
}

} // namespace

HistogramFiles emit_histograms(const PartitionStats& stats, const std::filesystem::path& prefix) {
  HistogramFiles files{prefix.string() + "_neighbors.csv", prefix.string() + "_remote_links.csv"};
  write_csv(files.neighbors, neighbor_histogram(stats));
  write_csv(files.remote_links, remote_link_histogram(stats));
  return files;
}

} // namespace sparselbm
