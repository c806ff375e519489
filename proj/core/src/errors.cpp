#include "plwk/errors.hpp"

namespace plwk {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::tau_too_small: return "TauTooSmall";
    case ErrorCode::theta_out_of_range: return "ThetaOutOfRange";
    case ErrorCode::lambda_max_too_small: return "LambdaMaxTooSmall";
    case ErrorCode::eta_out_of_range: return "EtaOutOfRange";
    case ErrorCode::invalid_config: return "InvalidConfig";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::index_out_of_range: return "IndexOutOfRange";
    case ErrorCode::outside_domain_ball: return "OutsideDomainBall";
    case ErrorCode::new_iterate_left_ball: return "NewIterateLeftBall";
    case ErrorCode::solve_failed: return "SolveFailed";
    case ErrorCode::gamma_out_of_bounds: return "GammaOutOfBounds";
    case ErrorCode::degenerate_direction: return "DegenerateDirection";
    case ErrorCode::no_valid_pairs: return "NoValidPairs";
  }
  return "UnknownError";
}

}  // namespace plwk
