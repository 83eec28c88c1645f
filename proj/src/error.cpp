#include "stm/error.hpp"

namespace stm {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::shape_mismatch: return "shape_mismatch";
    case ErrorCode::rank_error: return "rank_error";
    case ErrorCode::zero_tensor: return "zero_tensor";
    case ErrorCode::single_class: return "single_class";
    case ErrorCode::not_symmetric: return "not_symmetric";
    case ErrorCode::non_convergence: return "non_convergence";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::format_error: return "format_error";
  }
  return "unknown";
}

}  // namespace stm
