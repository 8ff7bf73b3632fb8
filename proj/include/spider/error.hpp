#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spider {

enum class ErrorCode {
  invalid_m,
  invalid_partition,
  invalid_interval,
  nonpositive_conductance,
  singular_interior_block,
  dimension_mismatch,
  degenerate_matrix,
  insufficient_points,
  zero_variance,
  invalid_config,
  parse_error,
  io_error,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace spider
