#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "grvs/checkpoint.hpp"
#include "grvs/geometry.hpp"
#include "grvs/psv.hpp"
#include "grvs/tensor.hpp"

namespace grvs {

struct ModelConfig {
  int channels = 16;     // C, latent channels
  int depth_planes = 8;  // D
  int patch = 2;         // F, patch / down-sampling factor
  int views = 3;         // V, odd
  int unet_levels = 2;
  int depth_group = 1;  // planes folded into channels before the U-Net (1 or 2)
  uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  bool operator==(const ModelConfig&) const = default;
};

/// Recurrent hidden state Z (1 x C x H/F x W/F) and the target camera it was
/// rendered at. An invalid state reads as zeros.
template <typename T>
struct LatentStateT {
  TensorT<T> z;
  Camera camera;
  bool valid = false;
};

template <typename T>
struct StepResultT {
  TensorT<T> prediction;  // 1 x 3 x H x W
  LatentStateT<T> state;
};

/// The recurrent view synthesizer: plane sweep volume -> patchify ->
/// latent rendering with the reprojected previous state -> unpatchify.
///
/// Latent renderer layout (w_l = C * 2^l channels at level l):
///   encoder level l: [2x spatial avg-pool if l > 0]
///                    conv 3x3x3 (depth stride 2 while depth > 1), leaky-relu
///                    conv 3x3x3, leaky-relu                        -> skip_l
///   bottleneck:      conv with a full-depth kernel collapsing depth to 1
///   decoder level l: 2x bilinear upsample, concat(skip_l collapsed over depth),
///                    two 1x3x3 convs with leaky-relu
///   output:          1x1x1 conv to C channels
template <typename T>
class GrvsModelT {
 public:
  static constexpr double kLeakySlope = 0.2;
  // He gain for the leaky-relu slope: sqrt(2 / (1 + slope^2)).
  static constexpr double kLeakyGain = 1.3867504905630728;

  explicit GrvsModelT(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  const std::vector<std::pair<std::string, TensorT<T>>>& parameters() const { return params_; }
  std::vector<TensorT<T>> parameter_tensors() const;
  const TensorT<T>& parameter(const std::string& name) const;
  TensorT<T>& parameter(const std::string& name);
  int64_t parameter_count() const;
  /// Swaps in `value` (same shape) as the named parameter; the tensor is shared, not copied.
  void replace_parameter(const std::string& name, TensorT<T> value);
  void set_requires_grad(bool on);

  /// D x V x 3 x H x W -> D x C x H/F x W/F.
  TensorT<T> patchify(const PlaneSweepVolumeT<T>& psv) const;

  /// Replicates Z over the D planes and warps replica k from the state's
  /// camera into `new_target` through the plane at depths[k], at latent
  /// resolution. Returns D x C x h x w (zeros for an invalid state).
  TensorT<T> reproject_state(const LatentStateT<T>& state, const Camera& new_target,
                             const DepthSchedule& schedule) const;

  /// Fuses y (D x C x h x w) with the reprojected state (same shape) into the
  /// new 1 x C x h x w latent, stamped with `target`.
  LatentStateT<T> latent_render(const TensorT<T>& y, const TensorT<T>& z_prev,
                                const Camera& target) const;

  /// 1x1 conv to 3F^2 channels followed by pixel_shuffle: channel
  /// c*F*F + r*F + s fills row offset r, column offset s of each F x F block.
  TensorT<T> unpatchify(const LatentStateT<T>& state) const;

  /// One recurrent step for target camera `target`.
  StepResultT<T> forward_step(std::span<const TensorT<T>> frames,
                              std::span<const Camera> cameras, const Camera& target,
                              const LatentStateT<T>& state,
                              const DepthSchedule& schedule) const;

  /// Zero state of the right shape for `target`.
  LatentStateT<T> initial_state(const Camera& target) const;

 private:
  TensorT<T> add_parameter(std::string name, Shape shape, int64_t fan_in, double gain,
                           std::mt19937_64& rng);
  TensorT<T> conv(const std::string& name, const TensorT<T>& x, const std::array<int, 3>& stride,
                  const std::array<int, 3>& padding) const;

  ModelConfig config_;
  std::vector<std::pair<std::string, TensorT<T>>> params_;
};

using GrvsModel = GrvsModelT<float>;
using LatentState = LatentStateT<float>;
using StepResult = StepResultT<float>;

template <typename U, typename T>
GrvsModelT<U> cast_model(const GrvsModelT<T>& model) {
  GrvsModelT<U> out(model.config());
  for (const auto& [name, t] : model.parameters()) {
    auto dst = out.parameter(name).mutable_data();
    auto src = t.data();
    for (size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<U>(src[i]);
  }
  return out;
}

Checkpoint model_to_checkpoint(const GrvsModel& model);
/// Rebuilds a model from a checkpoint; names, shapes and config must match.
GrvsModel model_from_checkpoint(const Checkpoint& checkpoint);

extern template class GrvsModelT<float>;
extern template class GrvsModelT<double>;

}  // namespace grvs
