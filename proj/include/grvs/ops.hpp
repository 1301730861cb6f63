#pragma once

#include <array>
#include <vector>

#include "grvs/tensor.hpp"

namespace grvs {

struct Conv3dOptions {
  std::array<int, 3> stride{1, 1, 1};
  std::array<int, 3> padding{0, 0, 0};
};

/// Cross-correlation of an N x Cin x D x H x W input with a
/// Cout x Cin x kd x kh x kw weight. `bias` may be undefined.
template <typename T>
TensorT<T> conv3d(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                  const Conv3dOptions& options = {});

/// N x Cin x H x W input, Cout x Cin x k x k weight.
template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                  int stride = 1, int padding = 0);

template <typename T>
TensorT<T> relu(const TensorT<T>& x);
template <typename T>
TensorT<T> leaky_relu(const TensorT<T>& x, T alpha);
template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b);
template <typename T>
TensorT<T> scale(const TensorT<T>& x, T factor);
template <typename T>
TensorT<T> concat(const std::vector<TensorT<T>>& parts, int axis);

/// Stacks equally shaped tensors along a new leading axis.
template <typename T>
TensorT<T> stack(const std::vector<TensorT<T>>& parts);

template <typename T>
TensorT<T> reshape(const TensorT<T>& x, Shape shape);
template <typename T>
TensorT<T> permute(const TensorT<T>& x, const std::vector<int>& axes);

/// Spatial window on the last two axes:
/// output[..., y, x] = input[..., top + y, left + x].
template <typename T>
TensorT<T> crop2d(const TensorT<T>& x, int64_t top, int64_t left, int64_t height,
                  int64_t width);

/// 2x upsampling of the last two axes (half-pixel centres, edge clamped).
template <typename T>
TensorT<T> resize_bilinear_2x(const TensorT<T>& x);
/// 2x2 mean pooling over the last two axes; both must be even.
template <typename T>
TensorT<T> avgpool_2x(const TensorT<T>& x);

/// N x (C*f*f) x h x w -> N x C x (h*f) x (w*f). Channel c*f*f + r*f + s lands
/// at row offset r and column offset s of the f x f block.
template <typename T>
TensorT<T> pixel_shuffle(const TensorT<T>& x, int factor);

template <typename T>
TensorT<T> l1_loss(const TensorT<T>& pred, const TensorT<T>& target);
template <typename T>
TensorT<T> sum(const TensorT<T>& x);
/// Sum of x * w elementwise; `w` is treated as a constant.
template <typename T>
TensorT<T> dot(const TensorT<T>& x, const TensorT<T>& w);

/// Multiply-accumulate count of a conv3d call with the given shapes.
int64_t conv3d_macs(const Shape& input, const Shape& weight, const Conv3dOptions& options);

/// Counts the forward multiply-accumulates of every convolution run on this
/// thread while the counter is alive.
class ScopedMacCounter {
 public:
  ScopedMacCounter();
  ~ScopedMacCounter();
  ScopedMacCounter(const ScopedMacCounter&) = delete;
  ScopedMacCounter& operator=(const ScopedMacCounter&) = delete;
  int64_t macs() const { return macs_; }

 private:
  friend void record_macs(int64_t);
  int64_t macs_ = 0;
  ScopedMacCounter* previous_;
};

void record_macs(int64_t macs);

}  // namespace grvs
