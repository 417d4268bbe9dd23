#include "sparselbm/adjacency.hpp"

#include <string>

#include "sparselbm/error.hpp"
#include "sparselbm/ranks.hpp"

namespace sparselbm {

RankView::RankView(const RankBox& box, const Dims& domain, const Periodic& periodic)
    : box_(box), domain_(domain), periodic_(periodic) {
  const Dims e = box.extent();
  grown_ = {e.x + 2, e.y + 2, e.z + 2};
  kind_.assign(grown_.volume(), Slot::missing);
  ic_.assign(grown_.volume(), 0);
}

std::uint64_t RankView::slot_of(std::int64_t dx, std::int64_t dy, std::int64_t dz) const noexcept {
  return linear_index({static_cast<std::uint64_t>(dx + 1), static_cast<std::uint64_t>(dy + 1),
                       static_cast<std::uint64_t>(dz + 1)},
                      grown_);
}

namespace {

struct HaloEntry {
  std::uint64_t slot;
  bool fluid;
  std::uint64_t ic;
};

/// Wraps a possibly out-of-range coordinate component. Returns false when the
/// component leaves a non-periodic domain.
bool wrap(std::int64_t v, std::uint64_t extent, bool periodic, std::uint64_t& out) {
  const auto n = static_cast<std::int64_t>(extent);
  if (v >= 0 && v < n) {
    out = static_cast<std::uint64_t>(v);
    return true;
  }
  if (!periodic) {
    return false;
  }
  out = static_cast<std::uint64_t>(((v % n) + n) % n);
  return true;
}

template <typename F>
void for_each_shell_offset(const Dims& e, F&& f) {
  const auto ex = static_cast<std::int64_t>(e.x);
  const auto ey = static_cast<std::int64_t>(e.y);
  const auto ez = static_cast<std::int64_t>(e.z);
  for (std::int64_t dz = -1; dz <= ez; ++dz) {
    for (std::int64_t dy = -1; dy <= ey; ++dy) {
      const bool inner_yz = dz >= 0 && dz < ez && dy >= 0 && dy < ey;
      for (std::int64_t dx = -1; dx <= ex; ++dx) {
        if (inner_yz && dx >= 0 && dx < ex) {
          dx = ex - 1;  // skip the own box interior
          continue;
        }
        f(dx, dy, dz);
      }
    }
  }
}

/// Does the grown box of `target` reach `source` at all (with wrapping)?
bool grown_touches(const RankBox& target, const RankBox& source, const Dims& domain, const Periodic& periodic) {
  for (int a = 0; a < 3; ++a) {
    const auto lo = static_cast<std::int64_t>(target.lo[a]) - 1;
    const auto hi = static_cast<std::int64_t>(target.hi[a]) + 1;  // exclusive
    const auto n = static_cast<std::int64_t>(domain[a]);
    const auto slo = static_cast<std::int64_t>(source.lo[a]);
    const auto shi = static_cast<std::int64_t>(source.hi[a]);
    bool hit = false;
    for (std::int64_t shift : {std::int64_t{0}, -n, n}) {
      if (shift != 0 && !periodic[a]) {
        continue;
      }
      if (slo + shift < hi && shi + shift > lo) {
        hit = true;
      }
    }
    if (!hit) {
      return false;
    }
  }
  return true;
}

} // namespace

std::vector<RankView> halo_exchange(std::span<const RankLocal> locals, const Dims& domain, const Periodic& periodic,
                                    Execution execution) {
  const auto ranks = static_cast<std::uint32_t>(locals.size());
  for (std::uint32_t r = 0; r < ranks; ++r) {
    if (locals[r].box.rank != r) {
      throw Error(ErrorCode::protocol, "rank data out of order at position " + std::to_string(r));
    }
  }
  std::vector<RankView> views;
  views.reserve(ranks);
  for (const RankLocal& l : locals) {
    views.emplace_back(l.box, domain, periodic);
  }

  Mailboxes<std::vector<HaloEntry>> mail(ranks);
  for_each_rank(ranks, execution, [&](std::uint32_t r) {
    const RankBox& mine = locals[r].box;
    for (std::uint32_t s = 0; s < ranks; ++s) {
      const RankBox& target = locals[s].box;
      if (!grown_touches(target, mine, domain, periodic)) {
        continue;
      }
      std::vector<HaloEntry> out;
      for_each_shell_offset(target.extent(), [&](std::int64_t dx, std::int64_t dy, std::int64_t dz) {
        Coord g;
        if (!wrap(static_cast<std::int64_t>(target.lo.x) + dx, domain.x, periodic.x, g.x) ||
            !wrap(static_cast<std::int64_t>(target.lo.y) + dy, domain.y, periodic.y, g.y) ||
            !wrap(static_cast<std::int64_t>(target.lo.z) + dz, domain.z, periodic.z, g.z) || !mine.contains(g)) {
          return;
        }
        const std::uint64_t ic = locals[r].index.at(g);
        out.push_back({views[s].slot_of(dx, dy, dz), ic != 0, ic});
      });
      if (!out.empty()) {
        mail.send(r, s, std::move(out));
      }
    }
  });

  for_each_rank(ranks, execution, [&](std::uint32_t r) {
    RankView& view = views[r];
    const RankBox& box = locals[r].box;
    const Dims e = box.extent();
    for (std::uint64_t z = 0; z < e.z; ++z) {
      for (std::uint64_t y = 0; y < e.y; ++y) {
        for (std::uint64_t x = 0; x < e.x; ++x) {
          const std::uint64_t ic = locals[r].index.index[linear_index({x, y, z}, e)];
          view.fill(view.slot_of(static_cast<std::int64_t>(x), static_cast<std::int64_t>(y),
                                 static_cast<std::int64_t>(z)),
                    ic != 0 ? RankView::Slot::fluid : RankView::Slot::solid, ic);
        }
      }
    }
    for (auto& env : mail.drain(r)) {
      view.add_source(env.from);
      for (const HaloEntry& h : env.payload) {
        view.fill(h.slot, h.fluid ? RankView::Slot::fluid : RankView::Slot::solid, h.ic);
        view.count_halo_cell();
      }
    }
    for_each_shell_offset(e, [&](std::int64_t dx, std::int64_t dy, std::int64_t dz) {
      const std::uint64_t slot = view.slot_of(dx, dy, dz);
      if (view.kind(slot) != RankView::Slot::missing) {
        return;
      }
      Coord g;
      if (wrap(static_cast<std::int64_t>(box.lo.x) + dx, domain.x, periodic.x, g.x) &&
          wrap(static_cast<std::int64_t>(box.lo.y) + dy, domain.y, periodic.y, g.y) &&
          wrap(static_cast<std::int64_t>(box.lo.z) + dz, domain.z, periodic.z, g.z)) {
        throw Error(ErrorCode::protocol, "rank " + std::to_string(r) + " is missing halo cell (" +
                                             std::to_string(g.x) + "," + std::to_string(g.y) + "," +
                                             std::to_string(g.z) + ")");
      }
      view.fill(slot, RankView::Slot::outside, 0);
    });
  });
  return views;
}

std::vector<SparseRecord> build_adjacency(const RankView& view) {
  const RankBox& box = view.box();
  const Dims e = box.extent();
  std::vector<SparseRecord> records;
  for (std::uint64_t z = 0; z < e.z; ++z) {
    for (std::uint64_t y = 0; y < e.y; ++y) {
      for (std::uint64_t x = 0; x < e.x; ++x) {
        const auto sx = static_cast<std::int64_t>(x);
        const auto sy = static_cast<std::int64_t>(y);
        const auto sz = static_cast<std::int64_t>(z);
        const std::uint64_t self = view.slot_of(sx, sy, sz);
        if (view.kind(self) != RankView::Slot::fluid) {
          continue;
        }
        SparseRecord rec;
        rec.coord = {box.lo.x + x, box.lo.y + y, box.lo.z + z};
        rec.ic = view.ic(self);
        for (int i = 0; i < kLinks; ++i) {
          const std::uint64_t n = view.slot_of(sx + kStencil[i][0], sy + kStencil[i][1], sz + kStencil[i][2]);
          if (view.kind(n) == RankView::Slot::missing) {
            throw Error(ErrorCode::protocol, "halo incomplete around rank " + std::to_string(box.rank));
          }
          rec.nbr[i] = view.kind(n) == RankView::Slot::fluid ? view.ic(n) : 0;
        }
        records.push_back(rec);
      }
    }
  }
  return records;
}

} // namespace sparselbm
