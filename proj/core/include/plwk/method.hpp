#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace plwk {

// PLWK  projective Landweber-Kaczmarz (cyclic unless configured otherwise)
// PLWKr randomized variant; forces a per-cycle random permutation
// LWK   fixed-step Landweber-Kaczmarz baseline
// LWKls Landweber-Kaczmarz with exact line search on the linearized residual
enum class MethodTag { plwk, plwkr, lwk, lwkls };

const char* to_string(MethodTag tag);
std::optional<MethodTag> parse_method(std::string_view name);

struct Method {
  MethodTag tag = MethodTag::plwk;

  // LWK step size; defaults to 0.9 / C^2 (classical Landweber scaling).
  std::optional<double> lwk_mu;

  // LWKls safeguard cap on the line-search step; defaults to 2 / C^2.
  std::optional<double> lwkls_step_cap;

  static Method make(MethodTag t) {
    Method m;
    m.tag = t;
    return m;
  }

  double resolved_lwk_mu(double derivative_bound) const;
  double resolved_lwkls_cap(double derivative_bound) const;
  bool uses_default_parameters() const { return !lwk_mu && !lwkls_step_cap; }
};

}  // namespace plwk
