#include "sparselbm/ranks.hpp"

#include <exception>
#include <thread>

namespace sparselbm {

void for_each_rank(std::uint32_t count, Execution mode, const std::function<void(std::uint32_t)>& body) {
  if (mode == Execution::sequential || count <= 1) {
    for (std::uint32_t r = 0; r < count; ++r) {
      body(r);
    }
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  {
    std::vector<std::jthread> workers;
    workers.reserve(count);
    for (std::uint32_t r = 0; r < count; ++r) {
      workers.emplace_back([&, r] {
        try {
          body(r);
        } catch (...) {
          errors[r] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

} // namespace sparselbm
