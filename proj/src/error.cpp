#include "spider/error.hpp"

namespace spider {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_m: return "invalid-m";
    case ErrorCode::invalid_partition: return "invalid-partition";
    case ErrorCode::invalid_interval: return "invalid-interval";
    case ErrorCode::nonpositive_conductance: return "nonpositive-conductance";
    case ErrorCode::singular_interior_block: return "singular-interior-block";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::degenerate_matrix: return "degenerate-matrix";
    case ErrorCode::insufficient_points: return "insufficient-points";
    case ErrorCode::zero_variance: return "zero-variance";
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::io_error: return "io-error";
  }
  return "error";
}

}  // namespace spider
