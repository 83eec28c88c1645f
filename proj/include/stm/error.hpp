#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stm {

enum class ErrorCode {
  invalid_argument,
  shape_mismatch,
  rank_error,
  zero_tensor,
  single_class,
  not_symmetric,
  non_convergence,
  io_error,
  format_error,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. The code is stable and meant for machine consumption
/// (the CLI prints it on failure); the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stm
