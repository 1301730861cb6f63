#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "grvs/tensor.hpp"

namespace grvs {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment buffers of one parameter.
struct AdamMoments {
  std::vector<float> m;
  std::vector<float> v;
};

/// One bias-corrected Adam update of `param` in place. `step` is the count
/// after this update (>= 1).
void adam_update(std::span<float> param, std::span<const float> grad, AdamMoments& moments,
                 int64_t step, const AdamConfig& config);

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config);

  /// Applies one update from the gradients currently held by the parameters.
  /// Parameters without a gradient are treated as having a zero gradient.
  void step();
  void zero_grad();

  int64_t step_count() const { return step_; }
  void set_step_count(int64_t step) { step_ = step; }
  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  std::vector<AdamMoments>& moments() { return moments_; }
  const std::vector<AdamMoments>& moments() const { return moments_; }

 private:
  std::vector<Tensor> params_;
  AdamConfig config_;
  std::vector<AdamMoments> moments_;
  int64_t step_ = 0;
};

}  // namespace grvs
