#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "grvs/tensor.hpp"

namespace grvs {

struct GradCheckResult {
  double max_relative_error = 0.0;
  size_t worst_input = 0;
  int64_t worst_element = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

using GradCheckFn = std::function<Tensor64(const std::vector<Tensor64>&)>;

/// Compares reverse-mode gradients against central finite differences, in
/// double precision, for every element of every input that requires a
/// gradient. Non-scalar outputs are reduced with a fixed random projection.
/// Relative error is |a - n| / max(|a|, |n|, 1e-7).
GradCheckResult grad_check(const GradCheckFn& op, std::vector<Tensor64> inputs,
                           double epsilon = 1e-3, uint64_t seed = 0);

}  // namespace grvs
