#include "sparselbm/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <vector>

#include "sparselbm/error.hpp"
#include "sparselbm/geometry.hpp"
#include "sparselbm/numbering.hpp"
#include "sparselbm/partition.hpp"
#include "sparselbm/preprocess.hpp"
#include "sparselbm/solver.hpp"
#include "sparselbm/sparse_io.hpp"

namespace sparselbm {

namespace {

namespace fs = std::filesystem;

/// Raised for command lines that parse but make no sense together.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    parts.push_back(item);
  }
  if (!s.empty() && s.back() == ',') {
    parts.emplace_back();
  }
  return parts;
}

Periodic parse_periodic(const std::string& s) {
  const auto parts = split_commas(s);
  if (parts.size() != 3) {
    throw UsageError("--periodic expects three comma-separated 0/1 values, got '" + s + "'");
  }
  std::array<bool, 3> v{};
  for (int a = 0; a < 3; ++a) {
    if (parts[a] != "0" && parts[a] != "1") {
      throw UsageError("--periodic value '" + parts[a] + "' is not 0 or 1");
    }
    v[a] = parts[a] == "1";
  }
  return {v[0], v[1], v[2]};
}

std::array<double, 3> parse_force(const std::string& s) {
  const auto parts = split_commas(s);
  if (parts.size() != 3) {
    throw UsageError("--force expects gx,gy,gz, got '" + s + "'");
  }
  std::array<double, 3> g{};
  for (int a = 0; a < 3; ++a) {
    std::size_t used = 0;
    try {
      g[a] = std::stod(parts[a], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != parts[a].size()) {
      throw UsageError("--force component '" + parts[a] + "' is not a number");
    }
  }
  return g;
}

void require_distinct(std::initializer_list<const std::string*> paths) {
  std::vector<fs::path> seen;
  for (const std::string* p : paths) {
    if (p == nullptr || p->empty()) {
      continue;
    }
    const fs::path norm = fs::absolute(*p).lexically_normal();
    for (const fs::path& q : seen) {
      if (q == norm) {
        throw UsageError("path '" + *p + "' is used for more than one role");
      }
    }
    seen.push_back(norm);
  }
}

std::vector<std::uint64_t> read_starts(const fs::path& path) {
  // Range checks against N_f happen once the file is preprocessed.
  std::ifstream in(path);
  std::vector<std::uint64_t> starts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(line, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != line.size()) {
      throw Error(ErrorCode::format, path.string() + ":" + std::to_string(line_no) + ": not an unsigned integer");
    }
    starts.push_back(v);
  }
  return starts;
}

struct SolveOptions {
  std::string in;
  std::optional<std::uint32_t> parts;
  double tau = 0.8;
  double lambda = 3.0 / 16.0;
  std::string force = "0,0,0";
  std::uint64_t steps = 100;
  std::uint64_t warmup = 0;
  std::string report;
  unsigned threads = 0;
};

void add_solve_options(CLI::App* cmd, SolveOptions& o) {
  cmd->add_option("--in", o.in, "Sparse file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--parts", o.parts, "Solver partitions (default: the file's partition table, else 1)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tau", o.tau, "Even relaxation time tau_plus")->capture_default_str();
  cmd->add_option("--lambda", o.lambda, "TRT magic parameter")->capture_default_str();
  cmd->add_option("--force", o.force, "Body force gx,gy,gz")->capture_default_str();
  cmd->add_option("--steps", o.steps, "Time steps")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--report", o.report, "Benchmark CSV output");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = one per partition)")->capture_default_str();
}

Simulation load_simulation(const SolveOptions& o) {
  TrtParams params;
  params.tau_plus = o.tau;
  params.magic_lambda = o.lambda;
  params.force = parse_force(o.force);
  const SparseHeader h = read_sparse_header(o.in);
  PartitionAssignment assignment;
  if (o.parts) {
    assignment = chunk_ranges(h.fluid_cells, *o.parts);
  } else if (h.partition_starts) {
    assignment = assignment_from_starts(*h.partition_starts, h.fluid_cells);
  } else {
    assignment = chunk_ranges(h.fluid_cells, 1);
  }
  Simulation sim = Simulation::load(o.in, assignment, params, o.threads);
  sim.init_equilibrium(1.0, {0.0, 0.0, 0.0});
  return sim;
}

void print_report(std::ostream& out, const BenchmarkReport& r, bool per_partition) {
  out << "partitions " << r.partitions << ", steps " << r.steps << ", fluid cells " << r.fluid_cells
      << ", updates " << r.flup_count << '\n';
  out << "seconds " << r.seconds << ", FLUP/s " << r.flups << ", est. GFLOP/s " << r.gflops_est << '\n';
  if (per_partition) {
    out << "partition,compute_s,exchange_s\n";
    for (std::size_t p = 0; p < r.compute_seconds.size(); ++p) {
      out << p << ',' << r.compute_seconds[p] << ',' << r.exchange_seconds[p] << '\n';
    }
  }
}

} // namespace

int run_command(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse lattice Boltzmann domain preprocessor, analyzer and solver", "sparselbm"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "Write a voxel geometry");
  bool channel = false;
  bool packing = false;
  std::uint64_t diameter = 0;
  std::uint64_t seed = 1;
  std::string gen_out;
  auto* channel_flag = generate->add_flag("--channel", channel, "Empty channel");
  auto* packing_flag = generate->add_flag("--packing", packing, "Tube with a sphere packing");
  channel_flag->excludes(packing_flag);
  packing_flag->excludes(channel_flag);
  generate->add_option("--d", diameter, "Diameter in cells")->required();
  generate->add_option("--seed", seed, "Packing seed")->capture_default_str();
  generate->add_option("--out", gen_out, "Voxel file")->required();

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "Build the sparse representation of a voxel file");
  std::string pre_in;
  std::string pre_out;
  std::string scheme_text = "lex:b=1";
  std::uint32_t ranks = 1;
  std::string periodic_text = "0,0,0";
  std::string starts_path;
  bool threaded = false;
  bool trace = false;
  pre->add_option("--in", pre_in, "Voxel file")->required()->check(CLI::ExistingFile);
  pre->add_option("--scheme", scheme_text, "Numbering scheme, lex:b=<int> or morton:g=<1|2>")->capture_default_str();
  pre->add_option("--ranks", ranks, "Preprocessor ranks")->capture_default_str()->check(CLI::PositiveNumber);
  pre->add_option("--periodic", periodic_text, "Periodic axes as x,y,z flags")->capture_default_str();
  pre->add_option("--starts", starts_path, "Partition start list to store in the header")->check(CLI::ExistingFile);
  pre->add_flag("--threaded", threaded, "Run ranks on threads");
  pre->add_flag("--trace", trace, "Log reduction messages to stderr");
  pre->add_option("--out", pre_out, "Sparse file")->required();

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Partition statistics of a sparse file");
  std::string an_in;
  std::optional<std::uint64_t> an_parts;
  std::string an_map;
  std::string an_prefix;
  analyze->add_option("--in", an_in, "Sparse file")->required()->check(CLI::ExistingFile);
  auto* parts_opt = analyze->add_option("--parts", an_parts, "Equal chunks")->check(CLI::PositiveNumber);
  auto* map_opt = analyze->add_option("--map", an_map, "Partition map file")->check(CLI::ExistingFile);
  parts_opt->excludes(map_opt);
  map_opt->excludes(parts_opt);
  analyze->add_option("--out-prefix", an_prefix, "Write <prefix>_neighbors.csv and <prefix>_remote_links.csv");

  // solve / bench
  auto* solve = app.add_subcommand("solve", "Run the flow solver");
  SolveOptions solve_opts;
  add_solve_options(solve, solve_opts);
  auto* bench = app.add_subcommand("bench", "Benchmark the flow solver");
  SolveOptions bench_opts;
  add_solve_options(bench, bench_opts);
  bench->add_option("--warmup", bench_opts.warmup, "Untimed steps first")->capture_default_str();

  // info
  auto* info = app.add_subcommand("info", "Print a sparse file header");
  std::string info_in;
  info->add_option("--in", info_in, "Sparse file")->required()->check(CLI::ExistingFile);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) {
    argv.push_back(a.c_str());
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (generate->parsed()) {
      if (!channel && !packing) {
        throw UsageError("generate needs --channel or --packing");
      }
      const VoxelGrid grid = channel ? make_channel(diameter) : make_packing(diameter, seed);
      voxel_save(gen_out, grid);
      out << "wrote " << gen_out << ": " << grid.dims().x << "x" << grid.dims().y << "x" << grid.dims().z << ", "
          << grid.fluid_count() << " fluid cells\n";
    } else if (pre->parsed()) {
      require_distinct({&pre_in, &pre_out, &starts_path});
      const Periodic periodic = parse_periodic(periodic_text);
      NumberingScheme scheme;
      try {
        scheme = NumberingScheme::parse(scheme_text);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      PreprocessOptions opts;
      opts.ranks = ranks;
      opts.periodic = periodic;
      opts.execution = threaded ? Execution::threaded : Execution::sequential;
      opts.trace = trace ? &err : nullptr;
      if (!starts_path.empty()) {
        opts.partition_starts = read_starts(starts_path);
      }
      const VoxelGrid grid = voxel_load(pre_in);
      const SparseHeader h = preprocess_to_file(grid, scheme, pre_out, opts);
      out << "wrote " << pre_out << ": " << h.fluid_cells << " fluid cells, scheme " << h.scheme << ", " << ranks
          << " ranks\n";
    } else if (analyze->parsed()) {
      if (!an_parts && an_map.empty()) {
        throw UsageError("analyze needs --parts or --map");
      }
      require_distinct({&an_in, &an_map});
      const SparseChunk all = read_sparse(an_in);
      const std::uint64_t nf = all.header.fluid_cells;
      const PartitionAssignment assignment = an_parts ? chunk_ranges(nf, *an_parts) : import_partition_map(an_map, nf);
      const PartitionStats stats = partition_stats(all.records, assignment);
      out << "partitions " << assignment.count() << ", fluid cells " << nf << '\n';
      out << "total remote links " << stats.total_remote_links() << ", max neighbor partitions "
          << stats.max_neighbor_count() << '\n';
      if (!an_prefix.empty()) {
        const HistogramFiles files = emit_histograms(stats, an_prefix);
        out << "wrote " << files.neighbors.string() << " and " << files.remote_links.string() << '\n';
      }
    } else if (solve->parsed() || bench->parsed()) {
      const bool is_bench = bench->parsed();
      const SolveOptions& o = is_bench ? bench_opts : solve_opts;
      require_distinct({&o.in, &o.report});
      Simulation sim = load_simulation(o);
      const double mass0 = sim.total_mass();
      const BenchmarkReport report = run_benchmark(sim, o.steps, o.warmup);
      if (!o.report.empty()) {
        write_benchmark_csv(o.report, report);
      }
      print_report(out, report, is_bench);
      if (!is_bench) {
        double umax = 0;
        for (const LocalDomain& d : sim.domains()) {
          for (const CellMoments& m : macroscopic(d, sim.params())) {
            umax = std::max(umax, std::sqrt(m.u[0] * m.u[0] + m.u[1] * m.u[1] + m.u[2] * m.u[2]));
          }
        }
        out << std::setprecision(17) << "mass " << mass0 << " -> " << sim.total_mass() << ", max |u| " << umax
            << '\n';
      }
    } else if (info->parsed()) {
      const SparseHeader h = read_sparse_header(info_in);
      out << "dims " << h.dims.x << " " << h.dims.y << " " << h.dims.z << '\n';
      out << "fluid_cells " << h.fluid_cells << '\n';
      out << "scheme " << h.scheme << '\n';
      out << "periodic " << h.periodic.x << "," << h.periodic.y << "," << h.periodic.z << '\n';
      if (h.partition_starts) {
        out << "partition_starts " << h.partition_starts->size() << ':';
        for (std::uint64_t s : *h.partition_starts) {
          out << ' ' << s;
        }
        out << '\n';
      } else {
        out << "partition_starts none\n";
      }
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

} // namespace sparselbm
