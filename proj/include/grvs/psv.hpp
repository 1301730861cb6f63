#pragma once

#include <optional>
#include <span>
#include <vector>

#include "grvs/geometry.hpp"
#include "grvs/tensor.hpp"

namespace grvs {

/// D x V x 3 x H x W stack of source views warped onto the target camera's
/// fronto-parallel depth planes.
template <typename T>
struct PlaneSweepVolumeT {
  TensorT<T> data;
  DepthSchedule schedule;
  Camera target;

  int64_t planes() const { return data.dim(0); }
  int64_t views() const { return data.dim(1); }
};

using PlaneSweepVolume = PlaneSweepVolumeT<float>;

/// Entry (k, v) is frames[v] resampled through the plane at depths[k].
/// Frames are 3 x H x W and may be larger than the target image (the target
/// intrinsics describe a window). Differentiable with respect to the frames.
template <typename T>
PlaneSweepVolumeT<T> build_dynamic_psv(std::span<const TensorT<T>> frames,
                                       std::span<const Camera> cameras, const Camera& target,
                                       const DepthSchedule& schedule);

/// Mean over the view axis: D x 3 x H x W.
Tensor psv_view_mean(const PlaneSweepVolume& psv);

/// Per-pixel variance across views at one plane, averaged over the colour
/// channels. Row-major H x W.
std::vector<double> cross_view_variance(const PlaneSweepVolume& psv, int plane);

/// Mean of cross_view_variance over the pixels selected by `mask` (all pixels
/// when absent). Lower means better aligned.
double focus_score(const PlaneSweepVolume& psv, int plane,
                   const std::vector<uint8_t>* mask = nullptr);

}  // namespace grvs
