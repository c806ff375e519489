#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>

namespace plwk {

// Coordinates of the discretized parameter space X and the data spaces Y_i.
// All inner products used by the iteration are Euclidean; problems that carry
// weighted norms (boundary quadrature, H1 metric) map their vectors into
// these coordinates isometrically, see problems/elliptic.hpp.
using ParameterVector = Eigen::VectorXd;
using DataVector = Eigen::VectorXd;
using Index = Eigen::Index;

// Euclidean inner product; raises dimension_mismatch on size disagreement.
double inner(const Eigen::Ref<const Eigen::VectorXd>& a,
             const Eigen::Ref<const Eigen::VectorXd>& b);

double norm(const Eigen::Ref<const Eigen::VectorXd>& a);

bool all_finite(const Eigen::Ref<const Eigen::VectorXd>& a);

// Quantities below zero_scale times the relevant norm scale are treated as
// zero where the underlying theory tests exact equality.
inline constexpr double zero_scale = 1e2 * std::numeric_limits<double>::epsilon();

}  // namespace plwk
