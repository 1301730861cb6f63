#include "grvs/optim.hpp"

#include <algorithm>
#include <cmath>

#include "grvs/errors.hpp"

namespace grvs {

void adam_update(std::span<float> param, std::span<const float> grad, AdamMoments& moments,
                 int64_t step, const AdamConfig& config) {
  if (param.size() != grad.size()) throw ShapeError("adam: gradient size mismatch");
  if (step < 1) throw ShapeError("adam: step count must be >= 1");
  if (moments.m.empty()) moments.m.assign(param.size(), 0.0f);
  if (moments.v.empty()) moments.v.assign(param.size(), 0.0f);
  if (moments.m.size() != param.size() || moments.v.size() != param.size()) {
    throw ShapeError("adam: moment buffers do not match parameter");
  }
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
  for (size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double m = b1 * moments.m[i] + (1.0 - b1) * g;
    const double v = b2 * moments.v[i] + (1.0 - b2) * g * g;
    moments.m[i] = static_cast<float>(m);
    moments.v[i] = static_cast<float>(v);
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    param[i] = static_cast<float>(param[i] -
                                  config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon));
  }
}

Adam::Adam(std::vector<Tensor> params, AdamConfig config)
    : params_(std::move(params)), config_(config), moments_(params_.size()) {}

void Adam::step() {
  ++step_;
  for (size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = params_[k];
    if (p.has_grad()) {
      adam_update(p.mutable_data(), p.grad(), moments_[k], step_, config_);
    } else {
      const std::vector<float> zeros(static_cast<size_t>(p.numel()), 0.0f);
      adam_update(p.mutable_data(), zeros, moments_[k], step_, config_);
    }
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

}  // namespace grvs
