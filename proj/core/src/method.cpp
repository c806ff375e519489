#include "plwk/method.hpp"

#include <algorithm>
#include <cctype>

namespace plwk {

const char* to_string(MethodTag tag) {
  switch (tag) {
    case MethodTag::plwk: return "PLWK";
    case MethodTag::plwkr: return "PLWKr";
    case MethodTag::lwk: return "LWK";
    case MethodTag::lwkls: return "LWKls";
  }
  return "?";
}

std::optional<MethodTag> parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "plwk") return MethodTag::plwk;
  if (lower == "plwkr") return MethodTag::plwkr;
  if (lower == "lwk") return MethodTag::lwk;
  if (lower == "lwkls") return MethodTag::lwkls;
  return std::nullopt;
}

double Method::resolved_lwk_mu(double derivative_bound) const {
  if (lwk_mu) return *lwk_mu;
  return 0.9 / (derivative_bound * derivative_bound);
}

double Method::resolved_lwkls_cap(double derivative_bound) const {
  if (lwkls_step_cap) return *lwkls_step_cap;
  return 2.0 / (derivative_bound * derivative_bound);
}

}  // namespace plwk
