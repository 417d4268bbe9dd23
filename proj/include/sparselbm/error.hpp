#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sparselbm {

enum class ErrorCode {
  invalid_geometry,
  invalid_decomposition,
  format,
  domain,
  parse,
  protocol,
  consistency,
  too_many_processes,
  data,
  parameter,
  divergence,
  not_converged,
  io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so that
/// callers (tests, the CLI) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace sparselbm
