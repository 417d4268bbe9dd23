#pragma once

// In-process stand-in for a message-passing job: ranks run as plain function
// calls or threads and talk through per-rank mailboxes. Each call to
// for_each_rank is one superstep; returning from it is the barrier.

#include <cstdint>
#include <functional>
#include <mutex>
#include <utility>
#include <vector>

#include "sparselbm/types.hpp"

namespace sparselbm {

/// Runs body(rank) for every rank in [0, count). Threaded mode starts one
/// thread per rank and rethrows the exception of the lowest failing rank.
void for_each_rank(std::uint32_t count, Execution mode, const std::function<void(std::uint32_t)>& body);

template <typename Msg>
struct Envelope {
  std::uint32_t from;
  Msg payload;
};

template <typename Msg>
class Mailboxes {
public:
  explicit Mailboxes(std::uint32_t ranks) : boxes_(ranks), locks_(ranks) {}

  void send(std::uint32_t from, std::uint32_t to, Msg msg) {
    std::lock_guard lock(locks_[to]);
    boxes_[to].push_back({from, std::move(msg)});
  }

  /// Takes every message delivered to `to`, in arrival order. Arrival order
  /// is scheduling dependent; receivers must not rely on it.
  std::vector<Envelope<Msg>> drain(std::uint32_t to) {
    std::lock_guard lock(locks_[to]);
    return std::exchange(boxes_[to], {});
  }

private:
  std::vector<std::vector<Envelope<Msg>>> boxes_;
  std::vector<std::mutex> locks_;
};

} // namespace sparselbm
