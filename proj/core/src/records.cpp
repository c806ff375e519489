#include "plwk/records.hpp"

namespace plwk {

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::converged: return "converged";
    case StopReason::max_cycles: return "max_cycles";
    case StopReason::residual_floor: return "residual_floor";
  }
  return "?";
}

}  // namespace plwk
