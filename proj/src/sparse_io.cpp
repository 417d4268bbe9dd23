#include "sparselbm/sparse_io.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "binary_io.hpp"
#include "sparselbm/error.hpp"
#include "sparselbm/partition.hpp"

namespace sparselbm {

namespace {

constexpr char kSparseMagic[4] = {'S', 'P', 'R', 'S'};
constexpr std::uint32_t kSparseVersion = 1;

std::string encode_header(const SparseHeader& h) {
  if (h.scheme.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::consistency, "scheme text too long");
  }
  std::string out(kSparseMagic, 4);
  detail::put_le<std::uint32_t>(out, kSparseVersion);
  detail::put_le<std::uint64_t>(out, h.dims.x);
  detail::put_le<std::uint64_t>(out, h.dims.y);
  detail::put_le<std::uint64_t>(out, h.dims.z);
  detail::put_le<std::uint64_t>(out, h.fluid_cells);
  detail::put_le<std::uint32_t>(out, h.periodic.bits());
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(h.scheme.size()));
  out += h.scheme;
  detail::put_le<std::uint32_t>(out, h.partition_starts ? 1u : 0u);
  if (h.partition_starts) {
    detail::put_le<std::uint64_t>(out, h.partition_starts->size());
    for (std::uint64_t s : *h.partition_starts) {
      detail::put_le<std::uint64_t>(out, s);
    }
  }
  return out;
}

void encode_record(std::string& out, const SparseRecord& r) {
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.coord.x));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.coord.y));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.coord.z));
  for (std::uint64_t n : r.nbr) {
    detail::put_le<std::uint64_t>(out, n);
  }
}

struct OpenSparse {
  std::ifstream file;
  SparseHeader header;
  std::uint64_t records_offset = 0;
};

OpenSparse open_sparse(const std::filesystem::path& path) {
  OpenSparse s;
  s.file.open(path, std::ios::binary);
  if (!s.file) {
    throw Error(ErrorCode::io, "cannot open " + path.string());
  }
  const std::string name = path.string();
  detail::LeReader in(s.file, name);
  char magic[4];
  in.read_bytes(magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kSparseMagic)) {
    throw Error(ErrorCode::format, name + ": bad magic at offset 0");
  }
  const auto version = in.read<std::uint32_t>("version");
  if (version != kSparseVersion) {
    throw Error(ErrorCode::format, name + ": unsupported version " + std::to_string(version) + " at offset 4");
  }
  SparseHeader& h = s.header;
  h.dims.x = in.read<std::uint64_t>("X");
  h.dims.y = in.read<std::uint64_t>("Y");
  h.dims.z = in.read<std::uint64_t>("Z");
  h.fluid_cells = in.read<std::uint64_t>("N_f");
  const auto bits = in.read<std::uint32_t>("periodic flags");
  if (bits > 7) {
    throw Error(ErrorCode::format, name + ": invalid periodic flags at offset 40");
  }
  h.periodic = Periodic::from_bits(bits);
  const auto len = in.read<std::uint16_t>("scheme length");
  h.scheme.resize(len);
  in.read_bytes(h.scheme.data(), len, "scheme");
  const auto has_table = in.read<std::uint32_t>("table flag");
  if (has_table > 1) {
    throw Error(ErrorCode::format, name + ": invalid table flag at offset " + std::to_string(in.offset() - 4));
  }
  if (has_table == 1) {
    const std::uint64_t table_at = in.offset();
    const auto count = in.read<std::uint64_t>("table count");
    if (count == 0 || count > h.fluid_cells) {
      throw Error(ErrorCode::format, name + ": invalid partition table size at offset " + std::to_string(table_at));
    }
    std::vector<std::uint64_t> starts(count);
    for (auto& v : starts) {
      v = in.read<std::uint64_t>("table entry");
    }
    try {
      assignment_from_starts(starts, h.fluid_cells);
    } catch (const Error& e) {
      throw Error(ErrorCode::format, name + ": partition table at offset " + std::to_string(table_at) + ": " + e.what());
    }
    h.partition_starts = std::move(starts);
  }
  s.records_offset = in.offset();
  s.file.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(s.file.tellg());
  const std::uint64_t want = s.records_offset + h.fluid_cells * kRecordBytes;
  if (size < want) {
    throw Error(ErrorCode::format, name + ": truncated, record data ends at offset " + std::to_string(size) +
                                       ", expected " + std::to_string(want));
  }
  if (size > want) {
    throw Error(ErrorCode::format, name + ": trailing bytes after offset " + std::to_string(want));
  }
  return s;
}

} // namespace

void write_sparse(const std::filesystem::path& path, std::vector<SparseRecord> records, const SparseHeader& header,
                  std::uint32_t writers) {
  const std::uint64_t nf = records.size();
  if (header.fluid_cells != nf) {
    throw Error(ErrorCode::consistency, "header claims " + std::to_string(header.fluid_cells) + " fluid cells, got " +
                                            std::to_string(nf) + " records");
  }
  std::sort(records.begin(), records.end(),
            [](const SparseRecord& a, const SparseRecord& b) { return a.ic < b.ic; });
  for (std::uint64_t i = 0; i < nf; ++i) {
    if (records[i].ic != i + 1) {
      const bool dup = i > 0 && records[i].ic == records[i - 1].ic;
      throw Error(ErrorCode::consistency, dup ? "duplicate contiguous index " + std::to_string(records[i].ic)
                                              : "missing contiguous index " + std::to_string(i + 1));
    }
    for (std::uint64_t n : records[i].nbr) {
      if (n > nf) {
        throw Error(ErrorCode::consistency, "cell " + std::to_string(i + 1) + " links past N_f");
      }
    }
    const Coord& c = records[i].coord;
    if (!inside(c, header.dims) || c.x > std::numeric_limits<std::uint32_t>::max() ||
        c.y > std::numeric_limits<std::uint32_t>::max() || c.z > std::numeric_limits<std::uint32_t>::max()) {
      throw Error(ErrorCode::consistency, "cell " + std::to_string(i + 1) + " lies outside the bounding box");
    }
  }
  if (header.partition_starts) {
    try {
      assignment_from_starts(*header.partition_starts, nf);
    } catch (const Error& e) {
      throw Error(ErrorCode::consistency, e.what());
    }
  }
  const std::string head = encode_header(header);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  }
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  if (nf > 0) {
    // Each writer owns one equal chunk and places it at its final offset.
    const PartitionAssignment chunks = chunk_ranges(nf, std::clamp<std::uint64_t>(writers, 1, nf));
    for (std::uint32_t w = 0; w < chunks.count(); ++w) {
      std::string buf;
      buf.reserve(chunks.size(w) * kRecordBytes);
      for (std::uint64_t ic = chunks.first(w); ic <= chunks.last(w); ++ic) {
        encode_record(buf, records[ic - 1]);
      }
      out.seekp(static_cast<std::streamoff>(head.size() + (chunks.first(w) - 1) * kRecordBytes));
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
  }
  if (!out) {
    throw Error(ErrorCode::io, "write failed for " + path.string());
  }
}

SparseHeader read_sparse_header(const std::filesystem::path& path) { return open_sparse(path).header; }

SparseChunk read_range(const std::filesystem::path& path, std::uint64_t first, std::uint64_t last) {
  OpenSparse s = open_sparse(path);
  const SparseHeader& h = s.header;
  SparseChunk chunk{h, first, {}};
  if (first > last) {
    return chunk;
  }
  if (first < 1 || last > h.fluid_cells) {
    throw Error(ErrorCode::domain, "record range [" + std::to_string(first) + ", " + std::to_string(last) +
                                       "] outside [1, " + std::to_string(h.fluid_cells) + "]");
  }
  const std::uint64_t n = last - first + 1;
  std::vector<unsigned char> raw(n * kRecordBytes);
  s.file.clear();
  s.file.seekg(static_cast<std::streamoff>(s.records_offset + (first - 1) * kRecordBytes));
  s.file.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::uint64_t>(s.file.gcount()) != raw.size()) {
    throw Error(ErrorCode::format, path.string() + ": short read of records " + std::to_string(first) + ".." +
                                       std::to_string(last));
  }
  chunk.records.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const unsigned char* p = raw.data() + i * kRecordBytes;
    SparseRecord& r = chunk.records[i];
    r.ic = first + i;
    r.coord = {detail::get_le<std::uint32_t>(p), detail::get_le<std::uint32_t>(p + 4),
               detail::get_le<std::uint32_t>(p + 8)};
    if (!inside(r.coord, h.dims)) {
      throw Error(ErrorCode::format, path.string() + ": record " + std::to_string(r.ic) +
                                         " has coordinates outside the bounding box");
    }
    for (int k = 0; k < kLinks; ++k) {
      r.nbr[k] = detail::get_le<std::uint64_t>(p + 12 + 8 * k);
      if (r.nbr[k] > h.fluid_cells) {
        throw Error(ErrorCode::format, path.string() + ": record " + std::to_string(r.ic) + " neighbor " +
                                           std::to_string(k) + " is " + std::to_string(r.nbr[k]) + " > N_f");
      }
    }
  }
  return chunk;
}

SparseChunk read_sparse(const std::filesystem::path& path) {
  const SparseHeader h = read_sparse_header(path);
  return read_range(path, 1, h.fluid_cells);
}

SparseChunk read_chunk(const std::filesystem::path& path, std::uint32_t n, std::uint32_t count) {
  const SparseHeader h = read_sparse_header(path);
  const PartitionAssignment chunks = chunk_ranges(h.fluid_cells, count);
  if (n >= count) {
    throw Error(ErrorCode::domain, "chunk " + std::to_string(n) + " of " + std::to_string(count));
  }
  return read_range(path, chunks.first(n), chunks.last(n));
}

} // namespace sparselbm
