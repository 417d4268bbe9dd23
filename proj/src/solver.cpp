#include "sparselbm/solver.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <thread>
#include <tuple>

#include "sparselbm/error.hpp"

namespace sparselbm {

namespace {

constexpr std::array<std::array<int, 3>, kPopulations> make_velocities() {
  std::array<std::array<int, 3>, kPopulations> v{};
  for (int q = 1; q < kPopulations; ++q) {
    v[q] = kStencil[q - 1];
  }
  return v;
}

constexpr auto kVelocity = make_velocities();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

} // namespace

void TrtParams::validate() const {
  if (!(tau_plus > 0.5)) {
    throw Error(ErrorCode::parameter, "tau_plus must be > 1/2, got " + std::to_string(tau_plus));
  }
  if (!(magic_lambda > 0.0)) {
    throw Error(ErrorCode::parameter, "magic lambda must be > 0, got " + std::to_string(magic_lambda));
  }
  for (double g : force) {
    if (!std::isfinite(g)) {
      throw Error(ErrorCode::parameter, "body force must be finite");
    }
  }
}

LocalDomain::LocalDomain(std::vector<SparseRecord> owned, const PartitionAssignment& assignment, std::uint32_t n)
    : partition_(n) {
  if (n >= assignment.count()) {
    throw Error(ErrorCode::domain, "partition " + std::to_string(n) + " of " + std::to_string(assignment.count()));
  }
  first_ic_ = assignment.first(n);
  const std::uint64_t last_ic = assignment.last(n);
  if (owned.size() != assignment.size(n)) {
    throw Error(ErrorCode::data, "partition " + std::to_string(n) + " expects " + std::to_string(assignment.size(n)) +
                                     " records, got " + std::to_string(owned.size()));
  }
  std::sort(owned.begin(), owned.end(), [](const SparseRecord& a, const SparseRecord& b) { return a.ic < b.ic; });
  const std::uint64_t nf = assignment.fluid_cells();

  coords_.reserve(owned.size());
  for (std::size_t i = 0; i < owned.size(); ++i) {
    if (owned[i].ic != first_ic_ + i) {
      throw Error(ErrorCode::data, "partition " + std::to_string(n) + " is missing record " +
                                       std::to_string(first_ic_ + i));
    }
    coords_.push_back(owned[i].coord);
    for (std::uint64_t nb : owned[i].nbr) {
      if (nb > nf) {
        throw Error(ErrorCode::data, "record " + std::to_string(owned[i].ic) + " links beyond N_f");
      }
      if (nb != 0 && (nb < first_ic_ || nb > last_ic)) {
        ghost_ic_.push_back(nb);
      }
    }
  }
  std::sort(ghost_ic_.begin(), ghost_ic_.end());
  ghost_ic_.erase(std::unique(ghost_ic_.begin(), ghost_ic_.end()), ghost_ic_.end());
  ghost_owner_.reserve(ghost_ic_.size());
  for (std::uint64_t ic : ghost_ic_) {
    ghost_owner_.push_back(assignment.partition_of(ic));
  }

  const std::size_t n_owned = owned.size();
  const auto slot_of = [&](std::uint64_t ic) -> std::size_t {
    if (ic >= first_ic_ && ic <= last_ic) {
      return static_cast<std::size_t>(ic - first_ic_);
    }
    const auto it = std::lower_bound(ghost_ic_.begin(), ghost_ic_.end(), ic);
    return n_owned + static_cast<std::size_t>(it - ghost_ic_.begin());
  };

  const std::size_t stride = n_owned + ghost_ic_.size();
  pull_.resize(static_cast<std::size_t>(kPopulations) * n_owned);
  for (std::size_t c = 0; c < n_owned; ++c) {
    pull_[c] = c;
    for (int q = 1; q < kPopulations; ++q) {
      // Population q arrives from the cell behind it, i.e. along the opposite link.
      const std::uint64_t from = owned[c].nbr[opposite(q - 1)];
      pull_[static_cast<std::size_t>(q) * n_owned + c] =
          from == 0 ? static_cast<std::size_t>(opposite_population(q)) * stride + c
                    : static_cast<std::size_t>(q) * stride + slot_of(from);
    }
  }

  // Ghosts of one owner form a contiguous run since ghost_ic_ is sorted and
  // partitions are index ranges.
  std::map<std::uint32_t, CommChannel> by_peer;
  for (std::size_t g = 0; g < ghost_ic_.size(); ++g) {
    CommChannel& ch = by_peer[ghost_owner_[g]];
    ch.peer = ghost_owner_[g];
    ch.recv_slots.push_back(static_cast<std::uint32_t>(n_owned + g));
  }
  // Links are symmetric, so the cells a peer reads from us are exactly our
  // cells that link into the peer.
  for (std::size_t c = 0; c < n_owned; ++c) {
    for (std::uint64_t nb : owned[c].nbr) {
      if (nb == 0 || (nb >= first_ic_ && nb <= last_ic)) {
        continue;
      }
      const std::uint32_t peer = assignment.partition_of(nb);
      CommChannel& ch = by_peer[peer];
      ch.peer = peer;
      if (ch.send_slots.empty() || ch.send_slots.back() != c) {
        ch.send_slots.push_back(static_cast<std::uint32_t>(c));
      }
    }
  }
  for (auto& [peer, ch] : by_peer) {
    ch.send_buffer.resize(ch.send_slots.size() * kPopulations);
    channels_.push_back(std::move(ch));
  }

  src_.assign(static_cast<std::size_t>(kPopulations) * stride, 0.0);
  dst_.assign(src_.size(), 0.0);
}

void LocalDomain::collide_and_stream(const TrtParams& params) {
  const std::size_t n = owned();
  const std::size_t s = stride();
  const double omega_plus = 1.0 / params.tau_plus;
  const double omega_minus = 1.0 / params.tau_minus();
  const std::array<double, 3> g = params.force;
  bool diverged = false;
  const double* src = src_.data();
  const std::size_t* pull = pull_.data();
  double* dst = dst_.data();

  for (std::size_t c = 0; c < n; ++c) {
    double f[kPopulations];
    for (int q = 0; q < kPopulations; ++q) {
      f[q] = src[pull[static_cast<std::size_t>(q) * n + c]];
    }
    double rho = 0;
    double jx = 0;
    double jy = 0;
    double jz = 0;
    for (int q = 0; q < kPopulations; ++q) {
      rho += f[q];
      jx += kVelocity[q][0] * f[q];
      jy += kVelocity[q][1] * f[q];
      jz += kVelocity[q][2] * f[q];
    }
    if (std::isnan(rho)) {
      diverged = true;
    }
    const double ux = jx / rho;
    const double uy = jy / rho;
    const double uz = jz / rho;
    const double usq = 1.5 * (ux * ux + uy * uy + uz * uz);

    dst[c] = f[0] - omega_plus * (f[0] - kWeightRest * rho * (1.0 - usq));
    for (int q = 1; q < kPopulations; q += 2) {
      const int qb = q + 1;
      const double w = weight(q);
      const double cu = kVelocity[q][0] * ux + kVelocity[q][1] * uy + kVelocity[q][2] * uz;
      const double cg = kVelocity[q][0] * g[0] + kVelocity[q][1] * g[1] + kVelocity[q][2] * g[2];
      const double feq_even = w * rho * (1.0 + 4.5 * cu * cu - usq);
      const double feq_odd = w * rho * 3.0 * cu;
      const double f_even = 0.5 * (f[q] + f[qb]);
      const double f_odd = 0.5 * (f[q] - f[qb]);
      const double relax_even = omega_plus * (f_even - feq_even);
      const double relax_odd = omega_minus * (f_odd - feq_odd);
      const double force = 3.0 * w * cg * rho;
      dst[static_cast<std::size_t>(q) * s + c] = f[q] - relax_even - relax_odd + force;
      dst[static_cast<std::size_t>(qb) * s + c] = f[qb] - relax_even + relax_odd - force;
    }
  }
  ++steps_;
  if (diverged) {
    throw Error(ErrorCode::divergence, "NaN density in partition " + std::to_string(partition_) + " at step " +
                                           std::to_string(steps_));
  }
  // Ghost slots of dst are stale; the next exchange refreshes them after the swap.
  std::swap(src_, dst_);
}

LocalDomain load_and_localize(const std::filesystem::path& path, const PartitionAssignment& assignment,
                              std::uint32_t n) {
  const SparseHeader h = read_sparse_header(path);
  if (assignment.fluid_cells() != h.fluid_cells) {
    throw Error(ErrorCode::data, "partition assignment covers " + std::to_string(assignment.fluid_cells()) +
                                     " cells, file has " + std::to_string(h.fluid_cells));
  }
  if (n >= assignment.count()) {
    throw Error(ErrorCode::domain, "partition " + std::to_string(n) + " of " + std::to_string(assignment.count()));
  }
  SparseChunk chunk = read_range(path, assignment.first(n), assignment.last(n));
  return LocalDomain(std::move(chunk.records), assignment, n);
}

LocalDomain load_and_localize(const std::filesystem::path& path, std::uint32_t n, std::uint32_t count) {
  const SparseHeader h = read_sparse_header(path);
  return load_and_localize(path, chunk_ranges(h.fluid_cells, count), n);
}

void init_equilibrium(LocalDomain& domain, double rho0, const std::array<double, 3>& u0) {
  if (!(rho0 > 0.0)) {
    throw Error(ErrorCode::parameter, "initial density must be > 0, got " + std::to_string(rho0));
  }
  const double usq = u0[0] * u0[0] + u0[1] * u0[1] + u0[2] * u0[2];
  auto pdf = domain.populations();
  const std::size_t s = domain.stride();
  for (int q = 0; q < kPopulations; ++q) {
    const double cu = kVelocity[q][0] * u0[0] + kVelocity[q][1] * u0[1] + kVelocity[q][2] * u0[2];
    const double feq = weight(q) * rho0 * (1.0 + 3.0 * cu + 4.5 * cu * cu - 1.5 * usq);
    std::fill_n(pdf.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(q) * s), s, feq);
  }
}

void step(LocalDomain& domain, const TrtParams& params) {
  if (!domain.channels().empty()) {
    throw Error(ErrorCode::protocol, "partition " + std::to_string(domain.partition()) +
                                         " has remote links; step it through a Simulation");
  }
  params.validate();
  domain.collide_and_stream(params);
}

std::vector<CellMoments> macroscopic(const LocalDomain& domain, const TrtParams& params) {
  std::vector<CellMoments> out(domain.owned());
  for (std::size_t c = 0; c < domain.owned(); ++c) {
    CellMoments m;
    std::array<double, 3> j{0, 0, 0};
    for (int q = 0; q < kPopulations; ++q) {
      const double f = domain.f(q, c);
      m.rho += f;
      for (int a = 0; a < 3; ++a) {
        j[a] += kVelocity[q][a] * f;
      }
    }
    for (int a = 0; a < 3; ++a) {
      m.u[a] = (j[a] + 0.5 * params.force[a]) / m.rho;
    }
    out[c] = m;
  }
  return out;
}

Simulation::Simulation(std::vector<LocalDomain> domains, TrtParams params, unsigned threads)
    : domains_(std::move(domains)), params_(params) {
  params_.validate();
  for (std::size_t d = 0; d < domains_.size(); ++d) {
    if (domains_[d].partition() != d) {
      throw Error(ErrorCode::protocol, "partition " + std::to_string(domains_[d].partition()) + " found at position " +
                                           std::to_string(d));
    }
  }
  peer_channel_.resize(domains_.size());
  for (std::size_t d = 0; d < domains_.size(); ++d) {
    for (const CommChannel& ch : domains_[d].channels()) {
      if (ch.peer >= domains_.size()) {
        throw Error(ErrorCode::protocol, "partition " + std::to_string(d) + " expects missing peer " +
                                             std::to_string(ch.peer));
      }
      const auto peer_channels = domains_[ch.peer].channels();
      const auto it = std::find_if(peer_channels.begin(), peer_channels.end(),
                                   [&](const CommChannel& p) { return p.peer == d; });
      if (it == peer_channels.end() || it->send_slots.size() != ch.recv_slots.size()) {
        throw Error(ErrorCode::protocol, "communication plans of partitions " + std::to_string(d) + " and " +
                                             std::to_string(ch.peer) + " do not match");
      }
      peer_channel_[d].push_back(static_cast<std::size_t>(it - peer_channels.begin()));
    }
  }
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  threads_ = threads == 0 ? std::min<unsigned>(hw, static_cast<unsigned>(domains_.size())) : threads;
  threads_ = std::clamp<unsigned>(threads_, 1, std::max<unsigned>(1, static_cast<unsigned>(domains_.size())));
  compute_seconds_.assign(domains_.size(), 0.0);
  exchange_seconds_.assign(domains_.size(), 0.0);
}

Simulation Simulation::load(const std::filesystem::path& path, const PartitionAssignment& assignment, TrtParams params,
                            unsigned threads) {
  std::vector<LocalDomain> domains;
  domains.reserve(assignment.count());
  for (std::uint32_t n = 0; n < assignment.count(); ++n) {
    domains.push_back(load_and_localize(path, assignment, n));
  }
  return Simulation(std::move(domains), params, threads);
}

void Simulation::init_equilibrium(double rho0, const std::array<double, 3>& u0) {
  for (LocalDomain& d : domains_) {
    sparselbm::init_equilibrium(d, rho0, u0);
  }
}

void Simulation::pack(std::size_t d) {
  LocalDomain& dom = domains_[d];
  const std::size_t s = dom.stride();
  const auto pdf = dom.populations();
  for (CommChannel& ch : dom.channels()) {
    std::size_t k = 0;
    for (std::uint32_t slot : ch.send_slots) {
      for (int q = 0; q < kPopulations; ++q) {
        ch.send_buffer[k++] = pdf[static_cast<std::size_t>(q) * s + slot];
      }
    }
  }
}

void Simulation::unpack(std::size_t d) {
  LocalDomain& dom = domains_[d];
  const std::size_t s = dom.stride();
  auto pdf = dom.populations();
  const auto channels = dom.channels();
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const CommChannel& from = domains_[channels[c].peer].channels()[peer_channel_[d][c]];
    std::size_t k = 0;
    for (std::uint32_t slot : channels[c].recv_slots) {
      for (int q = 0; q < kPopulations; ++q) {
        pdf[static_cast<std::size_t>(q) * s + slot] = from.send_buffer[k++];
      }
    }
  }
}

void Simulation::run(std::uint64_t steps) {
  const std::size_t n = domains_.size();
  if (steps == 0 || n == 0) {
    return;
  }
  const auto do_step = [&](std::size_t d, int phase) {
    const auto t0 = Clock::now();
    if (phase == 0) {
      pack(d);
      exchange_seconds_[d] += seconds_since(t0);
      return;
    }
    unpack(d);
    const auto t1 = Clock::now();
    exchange_seconds_[d] += std::chrono::duration<double>(t1 - t0).count();
    domains_[d].collide_and_stream(params_);
    compute_seconds_[d] += seconds_since(t1);
  };

  if (threads_ <= 1) {
    for (std::uint64_t t = 0; t < steps; ++t) {
      for (std::size_t d = 0; d < n; ++d) {
        do_step(d, 0);
      }
      for (std::size_t d = 0; d < n; ++d) {
        do_step(d, 1);
      }
      ++steps_;
    }
    return;
  }

  std::atomic<bool> failed{false};
  std::vector<std::exception_ptr> errors(threads_);
  std::barrier sync(static_cast<std::ptrdiff_t>(threads_));
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads_);
    for (unsigned w = 0; w < threads_; ++w) {
      workers.emplace_back([&, w] {
        for (std::uint64_t t = 0; t < steps; ++t) {
          for (int phase = 0; phase < 2; ++phase) {
            if (!failed.load()) {
              try {
                for (std::size_t d = w; d < n; d += threads_) {
                  do_step(d, phase);
                }
              } catch (...) {
                errors[w] = std::current_exception();
                failed.store(true);
              }
            }
            sync.arrive_and_wait();
          }
          if (failed.load()) {
            return;
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
  steps_ += steps;
}

std::uint64_t Simulation::fluid_cells() const noexcept {
  std::uint64_t n = 0;
  for (const LocalDomain& d : domains_) {
    n += d.owned();
  }
  return n;
}

double Simulation::total_mass() const {
  // Extended accumulators keep the sum's own rounding well below the
  // conservation tolerances on large domains.
  long double m = 0;
  for (const LocalDomain& d : domains_) {
    for (std::size_t c = 0; c < d.owned(); ++c) {
      for (int q = 0; q < kPopulations; ++q) {
        m += d.f(q, c);
      }
    }
  }
  return static_cast<double>(m);
}

std::array<double, 3> Simulation::total_momentum() const {
  std::array<long double, 3> j{0, 0, 0};
  for (const LocalDomain& d : domains_) {
    for (std::size_t c = 0; c < d.owned(); ++c) {
      for (int q = 0; q < kPopulations; ++q) {
        for (int a = 0; a < 3; ++a) {
          j[a] += kVelocity[q][a] * d.f(q, c);
        }
      }
    }
  }
  return {static_cast<double>(j[0]), static_cast<double>(j[1]), static_cast<double>(j[2])};
}

std::vector<std::pair<Coord, std::array<double, kPopulations>>> Simulation::state_by_coord() const {
  std::vector<std::pair<Coord, std::array<double, kPopulations>>> out;
  out.reserve(fluid_cells());
  for (const LocalDomain& d : domains_) {
    for (std::size_t c = 0; c < d.owned(); ++c) {
      std::array<double, kPopulations> f{};
      for (int q = 0; q < kPopulations; ++q) {
        f[q] = d.f(q, c);
      }
      out.emplace_back(d.coords()[c], f);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first.z, a.first.y, a.first.x) < std::tie(b.first.z, b.first.y, b.first.x);
  });
  return out;
}

BenchmarkReport run_benchmark(Simulation& sim, std::uint64_t steps, std::uint64_t warmup) {
  if (steps == 0) {
    throw Error(ErrorCode::parameter, "benchmark needs at least one step");
  }
  sim.run(warmup);
  const std::vector<double> compute0(sim.compute_seconds().begin(), sim.compute_seconds().end());
  const std::vector<double> exchange0(sim.exchange_seconds().begin(), sim.exchange_seconds().end());
  const auto t0 = Clock::now();
  sim.run(steps);
  BenchmarkReport r;
  r.seconds = seconds_since(t0);
  r.partitions = static_cast<std::uint32_t>(sim.domains().size());
  r.steps = steps;
  r.fluid_cells = sim.fluid_cells();
  r.flup_count = r.fluid_cells * steps;
  r.flups = r.seconds > 0 ? static_cast<double>(r.flup_count) / r.seconds : 0.0;
  r.gflops_est = r.flups * kFlopsPerUpdate / 1e9;
  for (std::size_t d = 0; d < sim.domains().size(); ++d) {
    r.compute_seconds.push_back(sim.compute_seconds()[d] - compute0[d]);
    r.exchange_seconds.push_back(sim.exchange_seconds()[d] - exchange0[d]);
  }
  return r;
}

void write_benchmark_csv(const std::filesystem::path& path, const BenchmarkReport& r) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  }
  out << "partitions,steps,fluid_cells,seconds,flups,gflops_est\n";
  out << r.partitions << ',' << r.steps << ',' << r.fluid_cells << ',' << r.seconds << ',' << r.flups << ','
      << r.gflops_est << '\n';
  if (!out) {
    throw Error(ErrorCode::io, "write failed for " + path.string());
  }
}

namespace {

/// Mean u_x per y row, rows ordered by y.
std::map<std::uint64_t, double> ux_profile(const Simulation& sim) {
  std::map<std::uint64_t, std::pair<double, std::uint64_t>> acc;
  for (const LocalDomain& d : sim.domains()) {
    const auto moments = macroscopic(d, sim.params());
    for (std::size_t c = 0; c < d.owned(); ++c) {
      auto& [sum, count] = acc[d.coords()[c].y];
      sum += moments[c].u[0];
      ++count;
    }
  }
  std::map<std::uint64_t, double> profile;
  for (const auto& [y, v] : acc) {
    profile[y] = v.first / static_cast<double>(v.second);
  }
  return profile;
}

} // namespace

PoiseuilleResult poiseuille_error(Simulation& sim, std::uint64_t max_steps) {
  const TrtParams& p = sim.params();
  if (p.force[1] != 0.0 || p.force[2] != 0.0) {
    throw Error(ErrorCode::parameter, "plate channel validation needs a force along x only");
  }
  PoiseuilleResult result;
  auto profile = ux_profile(sim);
  if (profile.empty()) {
    throw Error(ErrorCode::data, "no fluid cells");
  }
  const double width = static_cast<double>(profile.size());
  if (p.force[0] == 0.0) {
    result.profile.assign(profile.size(), 0.0);
    result.analytic.assign(profile.size(), 0.0);
    return result;
  }

  constexpr std::uint64_t kWindow = 100;
  constexpr double kTolerance = 1e-10;
  double residual = 1.0;
  while (true) {
    sim.run(kWindow);
    result.steps += kWindow;
    auto next = ux_profile(sim);
    double change = 0;
    double scale = 0;
    for (const auto& [y, u] : next) {
      change = std::max(change, std::abs(u - profile[y]));
      scale = std::max(scale, std::abs(u));
    }
    residual = scale > 0 ? change / scale : change;
    profile = std::move(next);
    if (residual < kTolerance) {
      break;
    }
    if (result.steps >= max_steps) {
      throw Error(ErrorCode::not_converged, "u_x profile still changing by " + std::to_string(residual) +
                                                " (relative) after " + std::to_string(result.steps) + " steps");
    }
  }
  result.residual = residual;

  const std::uint64_t first_row = profile.begin()->first;
  double err2 = 0;
  double ref2 = 0;
  for (const auto& [y, u] : profile) {
    // Half-way walls: the first fluid row sits half a cell from the wall plane.
    const double y_hat = static_cast<double>(y - first_row) + 0.5;
    const double a = poiseuille_analytic(y_hat, width, p.force[0], p.viscosity());
    result.profile.push_back(u);
    result.analytic.push_back(a);
    err2 += (u - a) * (u - a);
    ref2 += a * a;
  }
  result.relative_l2_error = std::sqrt(err2 / ref2);
  return result;
}

} // namespace sparselbm
