#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "grvs/checkpoint.hpp"
#include "grvs/dataset.hpp"
#include "grvs/model.hpp"
#include "grvs/sampler.hpp"

namespace grvs {

enum class DetachPolicy {
  kEveryStep,  // Z is cut from the graph after every recurrent step
  kNever,      // back-propagate through the whole unrolled window
};

struct TrainConfig {
  int steps = 200;
  int batch = 1;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  // "constant", or "cosine": lr * (f + (1 - f) * (1 + cos(pi * (step - 1) / steps)) / 2)
  // with f = lr_final_factor.
  std::string lr_schedule = "constant";
  double lr_final_factor = 0.05;
  int crop = 32;  // square training crop; 0 uses the full frame
  std::vector<int> dilations{1};
  double loss_switch = 0.1;  // kept for format stability; the loss is L1 throughout
  int unroll = 3;
  DetachPolicy detach = DetachPolicy::kEveryStep;
  bool recurrent = true;  // false forces an invalid state at every step
  uint64_t seed = 0;
  int checkpoint_interval = 0;  // 0 writes only the final checkpoint
  int log_interval = 10;

  void validate(const ModelConfig& model) const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct TrainOptions {
  std::filesystem::path checkpoint_path;  // empty: keep the checkpoint in memory only
  std::ostream* log = nullptr;
  /// Starting weights; a fresh model from the config seed when absent.
  const GrvsModel* init = nullptr;
};

struct TrainResult {
  GrvsModel model;
  Checkpoint checkpoint;
  std::vector<double> losses;  // mean L1 per optimizer step
  double seconds = 0.0;
};

TrainResult train(const ModelConfig& model_config, const TrainConfig& config,
                  const Dataset& dataset, const TrainOptions& options = {});

/// Depth schedule the model was trained with, read from the checkpoint; the
/// dataset bounds are the fallback.
DepthSchedule checkpoint_schedule(const Checkpoint& checkpoint, const ModelConfig& model,
                                  const Dataset* dataset);

struct RenderResult {
  std::vector<Tensor> frames;  // 3 x H x W per output frame of the last pass
  std::vector<std::vector<Tensor>> passes;  // every pass, in schedule order
  double seconds = 0.0;
  double fps = 0.0;  // output frames of the last pass per wall-clock second over all passes
};

/// Runs every pass of the target spec's dilation schedule over the target sequence,
/// carrying the hidden state across frames and passes. Predictions are
/// returned unclamped.
RenderResult render_video(const GrvsModel& model, const SequenceData& input,
                          const TargetSpec& spec, const DepthSchedule& schedule,
                          bool recurrent = true);

enum class EvalMode { kSynchronized, kBulletTime };

struct EvalConfig {
  EvalMode mode = EvalMode::kSynchronized;
  int bullet_time = 0;  // 0 picks the middle frame
  std::vector<int> dilations{1};
  bool recurrent = true;
  bool ground_truth = false;  // score the ground truth against itself
  int max_frames = 0;  // evaluate only the first N frames of each sequence (0: all)
};

struct MetricSummary {
  double psnr = 0.0;
  double ssim = 0.0;
  int frames = 0;
  std::optional<double> dyn_psnr;  // absent when no frame has dynamic pixels
  std::optional<double> dyn_ssim;
  int dyn_frames = 0;
};

struct PassReport {
  int dilation = 1;
  MetricSummary metrics;
};

struct TargetReport {
  std::string camera;  // "target1" or "target2"
  std::vector<PassReport> passes;
  MetricSummary final_metrics;  // the last pass
};

struct EvalReport {
  EvalConfig config;
  int scenes = 0;
  int frames = 0;
  double seconds = 0.0;
  double fps = 0.0;
  std::vector<TargetReport> targets;
  std::vector<PassReport> passes;  // both targets pooled
  MetricSummary aggregate;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// Accumulates per-frame metrics; means skip frames whose mask is empty.
class MetricAccumulator {
 public:
  void add(const Tensor& prediction, const Tensor& truth, const std::vector<uint8_t>& dyn_mask);
  MetricSummary summary() const;
  void merge(const MetricAccumulator& other);

 private:
  double psnr_ = 0.0, ssim_ = 0.0, dyn_psnr_ = 0.0, dyn_ssim_ = 0.0;
  int frames_ = 0, dyn_frames_ = 0;
};

/// Weights are copied before use; the model is never modified.
EvalReport evaluate(const GrvsModel& model, const Dataset& dataset, const EvalConfig& config,
                    const DepthSchedule& schedule);

/// Clamps to [0, 1].
Tensor clamp_image(const Tensor& x);

}  // namespace grvs
