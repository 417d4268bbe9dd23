#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sparselbm/adjacency.hpp"
#include "sparselbm/partition.hpp"
#include "sparselbm/sparse_io.hpp"

namespace sparselbm {

/// Populations per cell: rest plus the 18 stencil links. Population q >= 1
/// moves along kStencil[q - 1].
inline constexpr int kPopulations = 19;

inline constexpr double kWeightRest = 1.0 / 3.0;
inline constexpr double kWeightAxis = 1.0 / 18.0;
inline constexpr double kWeightDiagonal = 1.0 / 36.0;

/// Lattice weight of population q.
[[nodiscard]] constexpr double weight(int q) noexcept {
  return q == 0 ? kWeightRest : (q <= 6 ? kWeightAxis : kWeightDiagonal);
}

/// Population travelling against q (the rest population is its own opposite).
[[nodiscard]] constexpr int opposite_population(int q) noexcept { return q == 0 ? 0 : opposite(q - 1) + 1; }

/// Floating-point operations per fluid lattice update used for GFLOP/s estimates.
inline constexpr double kFlopsPerUpdate = 200.0;

struct TrtParams {
  double tau_plus = 0.8;
  double magic_lambda = 3.0 / 16.0;
  std::array<double, 3> force{0.0, 0.0, 0.0};  ///< body force per step, lattice units

  [[nodiscard]] double viscosity() const noexcept { return (tau_plus - 0.5) / 3.0; }
  /// From (tau_plus - 1/2)(tau_minus - 1/2) = magic_lambda.
  [[nodiscard]] double tau_minus() const noexcept { return 0.5 + magic_lambda / (tau_plus - 0.5); }
  /// Throws parameter unless tau_plus > 1/2 and magic_lambda > 0.
  void validate() const;
};

/// Ghosts exchanged with one neighbor partition, full population sets.
/// send_slots and recv_slots are both ordered by contiguous index so that the
/// peer's send list lines up with this side's receive list.
struct CommChannel {
  std::uint32_t peer = 0;
  std::vector<std::uint32_t> send_slots;  ///< owned slots the peer needs
  std::vector<std::uint32_t> recv_slots;  ///< ghost slots filled from the peer
  std::vector<double> send_buffer;
};

/// One solver partition: a contiguous chunk of the sparse list plus ghost
/// copies of the remote cells it links to. PDFs are stored structure of
/// arrays: population q of slot s lives at q * stride() + s.
class LocalDomain {
public:
  LocalDomain() = default;

  /// Builds the local adjacency from the records of partition `n`.
  LocalDomain(std::vector<SparseRecord> owned, const PartitionAssignment& assignment, std::uint32_t n);

  [[nodiscard]] std::uint32_t partition() const noexcept { return partition_; }
  [[nodiscard]] std::uint64_t first_ic() const noexcept { return first_ic_; }
  [[nodiscard]] std::size_t owned() const noexcept { return coords_.size(); }
  [[nodiscard]] std::size_t ghosts() const noexcept { return ghost_ic_.size(); }
  [[nodiscard]] std::size_t stride() const noexcept { return owned() + ghosts(); }

  [[nodiscard]] std::span<const Coord> coords() const noexcept { return coords_; }
  [[nodiscard]] std::span<const std::uint64_t> ghost_ic() const noexcept { return ghost_ic_; }
  [[nodiscard]] std::span<const std::uint32_t> ghost_owner() const noexcept { return ghost_owner_; }
  [[nodiscard]] std::span<const CommChannel> channels() const noexcept { return channels_; }
  [[nodiscard]] std::span<CommChannel> channels() noexcept { return channels_; }

  /// Flat source index read for population q of owned cell `cell`.
  [[nodiscard]] std::size_t pull_source(int q, std::size_t cell) const noexcept {
    return pull_[static_cast<std::size_t>(q) * owned() + cell];
  }

  /// Current (post-collision) population q of slot s.
  [[nodiscard]] double f(int q, std::size_t s) const noexcept { return src_[static_cast<std::size_t>(q) * stride() + s]; }
  [[nodiscard]] std::span<const double> populations() const noexcept { return src_; }
  [[nodiscard]] std::span<double> populations() noexcept { return src_; }

  /// One fused pull-stream and TRT collide over the owned cells, then swap.
  /// Ghost slots must already hold the neighbors' current populations.
  void collide_and_stream(const TrtParams& params);

  [[nodiscard]] std::uint64_t steps_taken() const noexcept { return steps_; }

private:
  std::uint32_t partition_ = 0;
  std::uint64_t first_ic_ = 1;
  std::vector<Coord> coords_;
  std::vector<std::uint64_t> ghost_ic_;
  std::vector<std::uint32_t> ghost_owner_;
  std::vector<std::size_t> pull_;
  std::vector<CommChannel> channels_;
  std::vector<double> src_;
  std::vector<double> dst_;
  std::uint64_t steps_ = 0;
};

/// Reads partition `n` of `assignment` from a sparse file and localizes it:
/// solid links become bounce-back self references, remote links ghost slots.
LocalDomain load_and_localize(const std::filesystem::path& path, const PartitionAssignment& assignment,
                              std::uint32_t n);
/// Same with the file cut into `count` equal chunks.
LocalDomain load_and_localize(const std::filesystem::path& path, std::uint32_t n, std::uint32_t count);

/// f_q = w_q rho0 (1 + 3 c.u0 + 4.5 (c.u0)^2 - 1.5 |u0|^2) on owned and ghost slots.
void init_equilibrium(LocalDomain& domain, double rho0, const std::array<double, 3>& u0);

/// One step of a lone partition (no remote links).
void step(LocalDomain& domain, const TrtParams& params);

struct CellMoments {
  double rho = 0;
  std::array<double, 3> u{};
};

/// Density and velocity per owned cell; u includes the half-force shift.
std::vector<CellMoments> macroscopic(const LocalDomain& domain, const TrtParams& params);

/// All partitions of one run, stepped in lockstep with a ghost exchange
/// before every update.
class Simulation {
public:
  /// `threads` = 0 picks one worker per partition, capped by the hardware.
  Simulation(std::vector<LocalDomain> domains, TrtParams params, unsigned threads = 0);

  static Simulation load(const std::filesystem::path& path, const PartitionAssignment& assignment, TrtParams params,
                         unsigned threads = 0);

  void init_equilibrium(double rho0, const std::array<double, 3>& u0);
  /// Throws divergence naming the step when a NaN density shows up.
  void run(std::uint64_t steps);

  [[nodiscard]] const TrtParams& params() const noexcept { return params_; }
  [[nodiscard]] std::span<const LocalDomain> domains() const noexcept { return domains_; }
  [[nodiscard]] std::uint64_t fluid_cells() const noexcept;
  [[nodiscard]] std::uint64_t steps_taken() const noexcept { return steps_; }

  [[nodiscard]] double total_mass() const;
  /// Sum of c_q f_q over all cells, without the half-force shift.
  [[nodiscard]] std::array<double, 3> total_momentum() const;

  /// Wall seconds spent per partition since construction.
  [[nodiscard]] std::span<const double> compute_seconds() const noexcept { return compute_seconds_; }
  [[nodiscard]] std::span<const double> exchange_seconds() const noexcept { return exchange_seconds_; }

  /// Populations of every fluid cell keyed by coordinate order, for
  /// comparing runs with different partitionings or numberings.
  [[nodiscard]] std::vector<std::pair<Coord, std::array<double, kPopulations>>> state_by_coord() const;

private:
  void pack(std::size_t d);
  void unpack(std::size_t d);

  std::vector<LocalDomain> domains_;
  TrtParams params_;
  unsigned threads_;
  /// peer_channel_[d][c]: index of the channel in domains_[peer] that sends to d.
  std::vector<std::vector<std::size_t>> peer_channel_;
  std::vector<double> compute_seconds_;
  std::vector<double> exchange_seconds_;
  std::uint64_t steps_ = 0;
};

struct BenchmarkReport {
  std::uint32_t partitions = 0;
  std::uint64_t steps = 0;
  std::uint64_t fluid_cells = 0;
  std::uint64_t flup_count = 0;
  double seconds = 0;
  double flups = 0;
  double gflops_est = 0;
  std::vector<double> compute_seconds;
  std::vector<double> exchange_seconds;
};

/// Times `steps` updates after `warmup` untimed ones.
BenchmarkReport run_benchmark(Simulation& sim, std::uint64_t steps, std::uint64_t warmup = 0);

/// `partitions,steps,fluid_cells,seconds,flups,gflops_est` with header line.
void write_benchmark_csv(const std::filesystem::path& path, const BenchmarkReport& report);

struct PoiseuilleResult {
  double relative_l2_error = 0;
  std::uint64_t steps = 0;
  double residual = 0;
  std::vector<double> profile;   ///< measured u_x per fluid row
  std::vector<double> analytic;  ///< u_x per fluid row from the closed form
};

/// Steps a plate channel (walls at y = 0 and y = Y-1, periodic x and z,
/// force along x) until the u_x profile changes by less than 1e-10 relative
/// over 100 steps, then compares it with the parabolic solution. Throws
/// not_converged after `max_steps`.
PoiseuilleResult poiseuille_error(Simulation& sim, std::uint64_t max_steps);

/// Parabolic plate-channel velocity at wall distance `y_hat` for gap width
/// `width` (half-way walls).
[[nodiscard]] constexpr double poiseuille_analytic(double y_hat, double width, double force, double nu) noexcept {
  return y_hat * (width - y_hat) * force / (2.0 * nu);
}

} // namespace sparselbm
