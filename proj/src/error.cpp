#include "sparselbm/error.hpp"

namespace sparselbm {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
  case ErrorCode::invalid_geometry: return "invalid geometry";
  case ErrorCode::invalid_decomposition: return "invalid decomposition";
  case ErrorCode::format: return "format error";
  case ErrorCode::domain: return "domain error";
  case ErrorCode::parse: return "parse error";
  case ErrorCode::protocol: return "protocol error";
  case ErrorCode::consistency: return "consistency error";
  case ErrorCode::too_many_processes: return "too many processes";
  case ErrorCode::data: return "data error";
  case ErrorCode::parameter: return "parameter error";
  case ErrorCode::divergence: return "divergence";
  case ErrorCode::not_converged: return "not converged";
  case ErrorCode::io: return "io error";
  }
  return "error";
}

} // namespace sparselbm
