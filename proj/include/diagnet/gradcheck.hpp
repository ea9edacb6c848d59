#pragma once

#include <functional>
#include <span>

#include "diagnet/layers.hpp"

namespace diagnet {

inline constexpr double kGradCheckEpsilon = 1e-5;

/// |a - n| / max(1e-8, |a| + |n|).
double relative_error(double analytic, double numeric);

/// Compares `analytic[i]` with the central difference of `loss` around each
/// `values[i]` (restored afterwards). Returns the largest relative error.
double check_gradient(const std::function<double()>& loss, std::span<double> values,
                      std::span<const double> analytic, double eps = kGradCheckEpsilon);

struct GradCheckReport {
  double max_param_error = 0;
  double max_input_error = 0;
  double max_error() const { return std::max(max_param_error, max_input_error); }
};

/// Finite-difference check of a network followed by softmax cross-entropy,
/// over every parameter and every input element.
GradCheckReport grad_check(Sequential& net, const Tensor& input, std::size_t target,
                           double eps = kGradCheckEpsilon);

}  // namespace diagnet
