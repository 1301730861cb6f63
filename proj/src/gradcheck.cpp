#include "grvs/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "grvs/ops.hpp"

namespace grvs {

GradCheckResult grad_check(const GradCheckFn& op, std::vector<Tensor64> inputs, double epsilon,
                           uint64_t seed) {
  Tensor64 probe = op(inputs);
  Tensor64 projection;
  if (probe.numel() != 1) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> w(static_cast<size_t>(probe.numel()));
    for (double& v : w) v = dist(rng);
    projection = Tensor64(probe.shape(), std::move(w));
  }
  auto objective = [&]() {
    Tensor64 out = op(inputs);
    return projection.defined() ? dot(out, projection) : reshape(out, Shape{});
  };

  for (Tensor64& in : inputs) in.zero_grad();
  objective().backward();

  GradCheckResult result;
  for (size_t k = 0; k < inputs.size(); ++k) {
    Tensor64& in = inputs[k];
    if (!in.requires_grad()) continue;
    const std::vector<double> analytic =
        in.has_grad() ? std::vector<double>(in.grad().begin(), in.grad().end())
                      : std::vector<double>(static_cast<size_t>(in.numel()), 0.0);
    auto values = in.mutable_data();
    for (int64_t i = 0; i < in.numel(); ++i) {
      const double saved = values[static_cast<size_t>(i)];
      values[static_cast<size_t>(i)] = saved + epsilon;
      const double plus = objective().item();
      values[static_cast<size_t>(i)] = saved - epsilon;
      const double minus = objective().item();
      values[static_cast<size_t>(i)] = saved;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double a = analytic[static_cast<size_t>(i)];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-7});
      const double err = std::abs(a - numeric) / denom;
      if (err > result.max_relative_error) {
        result = {err, k, i, a, numeric};
      }
    }
  }
  return result;
}

}  // namespace grvs
