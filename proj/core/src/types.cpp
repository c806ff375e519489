#include "plwk/types.hpp"

#include "plwk/errors.hpp"

#include <cmath>
#include <string>

namespace plwk {

double inner(const Eigen::Ref<const Eigen::VectorXd>& a,
             const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) {
    raise(ErrorCode::dimension_mismatch,
          "inner: sizes " + std::to_string(a.size()) + " and " +
              std::to_string(b.size()));
  }
  return a.dot(b);
}

double norm(const Eigen::Ref<const Eigen::VectorXd>& a) { return a.norm(); }

bool all_finite(const Eigen::Ref<const Eigen::VectorXd>& a) {
  return a.allFinite();
}

}  // namespace plwk
