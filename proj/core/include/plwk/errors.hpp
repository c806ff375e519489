#pragma once

#include <stdexcept>
#include <string>

namespace plwk {

enum class ErrorCode {
  // configuration
  tau_too_small,
  theta_out_of_range,
  lambda_max_too_small,
  eta_out_of_range,
  invalid_config,
  // vector plumbing
  dimension_mismatch,
  index_out_of_range,
  // iteration domain discipline
  outside_domain_ball,
  new_iterate_left_ball,
  // problem evaluation
  solve_failed,
  gamma_out_of_bounds,
  degenerate_direction,
  no_valid_pairs,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace plwk
