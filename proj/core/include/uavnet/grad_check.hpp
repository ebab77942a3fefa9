#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "uavnet/autodiff.hpp"

namespace uavnet::ad {

// Builds a scalar from inputs recorded as leaves on a fresh tape.
using ScalarFunction = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Compares reverse-mode gradients against central differences:
//   max over coordinates of |analytic - numeric| / max(1e-8, |numeric|).
// Throws NonFiniteError when any evaluation is not finite.
GradCheckResult grad_check(const ScalarFunction& fn, std::vector<Tensor> point,
                           double epsilon = 1e-5);

}  // namespace uavnet::ad
