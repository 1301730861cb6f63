#include "grvs/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "grvs/errors.hpp"
#include "grvs/metrics.hpp"
#include "grvs/ops.hpp"

namespace grvs {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

const char* detach_name(DetachPolicy p) { return p == DetachPolicy::kNever ? "never" : "every_step"; }

DetachPolicy parse_detach(const std::string& s) {
  if (s == "every_step") return DetachPolicy::kEveryStep;
  if (s == "never") return DetachPolicy::kNever;
  throw ConfigError("unknown detach policy '" + s + "' (expected every_step or never)");
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

struct StepInputs {
  std::vector<Tensor> frames;
  std::vector<Camera> cameras;
};

StepInputs gather_inputs(const SequenceData& input, int t, int dilation, int views) {
  const InputSelection sel = select_inputs(t, dilation, views, input.size());
  StepInputs out;
  for (int idx : sel.indices) {
    out.frames.push_back(input.frame(idx));
    out.cameras.push_back(input.cameras[static_cast<size_t>(idx - 1)]);
  }
  return out;
}

Camera crop_camera(const Camera& c, int top, int left, int size) {
  Camera out = c;
  out.intrinsics = c.intrinsics.cropped(top, left, size, size);
  return out;
}

bool has_window_centre(const std::vector<uint8_t>& mask, int H, int W) {
  constexpr int r = 5;
  for (int y = r; y < H - r; ++y) {
    for (int x = r; x < W - r; ++x) {
      if (mask[static_cast<size_t>(y * W + x)]) return true;
    }
  }
  return false;
}

nlohmann::json summary_json(const MetricSummary& m) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"psnr", m.psnr},           {"ssim", m.ssim},           {"frames", m.frames},
          {"dyn_psnr", opt(m.dyn_psnr)}, {"dyn_ssim", opt(m.dyn_ssim)}, {"dyn_frames", m.dyn_frames}};
}

nlohmann::json passes_json(const std::vector<PassReport>& passes) {
  nlohmann::json out = nlohmann::json::array();
  for (const PassReport& p : passes) {
    out.push_back({{"dilation", p.dilation}, {"metrics", summary_json(p.metrics)}});
  }
  return out;
}

}  // namespace

void TrainConfig::validate(const ModelConfig& model) const {
  if (steps < 0) throw ConfigError("train.steps must be >= 0");
  if (batch < 1) throw ConfigError("train.batch must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train.lr must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw ConfigError("train.beta1 and train.beta2 must lie in [0, 1)");
  }
  if (lr_schedule != "constant" && lr_schedule != "cosine") {
    throw ConfigError("train.lr_schedule must be constant or cosine");
  }
  if (lr_final_factor < 0.0 || lr_final_factor > 1.0) {
    throw ConfigError("train.lr_final_factor must lie in [0, 1]");
  }
  if (crop < 0 || crop % model.patch != 0) {
    throw ConfigError("train.crop must be a non-negative multiple of model.F");
  }
  if (unroll < 1) throw ConfigError("train.unroll must be >= 1");
  if (checkpoint_interval < 0) throw ConfigError("train.checkpoint_interval must be >= 0");
  TargetSpec probe;
  probe.dilations = dilations;
  iteration_passes(probe);
}

nlohmann::json TrainConfig::to_json() const {
  return {{"steps", steps},
          {"batch", batch},
          {"lr", learning_rate},
          {"beta1", beta1},
          {"beta2", beta2},
          {"lr_schedule", lr_schedule},
          {"lr_final_factor", lr_final_factor},
          {"crop", crop},
          {"dilations", dilations},
          {"loss_switch", loss_switch},
          {"unroll", unroll},
          {"detach", detach_name(detach)},
          {"recurrent", recurrent},
          {"seed", seed},
          {"checkpoint_interval", checkpoint_interval},
          {"log_interval", log_interval}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.steps = j.at("steps").get<int>();
    c.batch = j.at("batch").get<int>();
    c.learning_rate = j.at("lr").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.lr_schedule = j.at("lr_schedule").get<std::string>();
    c.lr_final_factor = j.at("lr_final_factor").get<double>();
    c.crop = j.at("crop").get<int>();
    c.dilations = j.at("dilations").get<std::vector<int>>();
    c.loss_switch = j.at("loss_switch").get<double>();
    c.unroll = j.at("unroll").get<int>();
    c.detach = parse_detach(j.at("detach").get<std::string>());
    c.recurrent = j.at("recurrent").get<bool>();
    c.seed = j.at("seed").get<uint64_t>();
    c.checkpoint_interval = j.at("checkpoint_interval").get<int>();
    c.log_interval = j.at("log_interval").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed train config: ") + e.what());
  }
  return c;
}

TrainResult train(const ModelConfig& model_config, const TrainConfig& config,
                  const Dataset& dataset, const TrainOptions& options) {
  model_config.validate();
  config.validate(model_config);
  if (dataset.scenes.empty()) throw ConfigError("training needs at least one scene");
  const int W = dataset.width();
  const int H = dataset.height();
  const int T = dataset.frames();
  const int F = model_config.patch;
  const int crop = config.crop == 0 ? std::min(W, H) : config.crop;
  if (config.crop == 0 && W != H) throw ConfigError("train.crop=0 needs square frames");
  if (crop > W || crop > H) {
    throw ConfigError("train.crop " + std::to_string(crop) + " exceeds the " + std::to_string(W) +
                      "x" + std::to_string(H) + " frames");
  }
  if (W % F != 0 || H % F != 0) throw ConfigError("frame size must be divisible by model.F");
  if (config.unroll > T) throw ConfigError("train.unroll exceeds the sequence length");

  const auto start = Clock::now();
  TrainResult result{options.init ? cast_model<float>(*options.init) : GrvsModel(model_config),
                     {}, {}, 0.0};
  if (!(result.model.config() == model_config)) {
    throw ConfigError("initial weights were built for a different model configuration");
  }
  GrvsModel& model = result.model;
  model.set_requires_grad(true);
  Adam adam(model.parameter_tensors(),
            AdamConfig{config.learning_rate, config.beta1, config.beta2, 1e-8});
  const DepthSchedule schedule =
      make_depth_schedule(dataset.near, dataset.far, model_config.depth_planes);
  TargetSpec probe;
  probe.dilations = config.dilations;
  const std::vector<Pass> passes = iteration_passes(probe);
  const int terms = config.unroll * static_cast<int>(passes.size());
  const float weight = 1.0f / static_cast<float>(config.batch * terms);
  std::mt19937_64 rng(config.seed);

  auto snapshot = [&] {
    Checkpoint ck = model_to_checkpoint(model);
    ck.hyper["train"] = config.to_json();
    ck.hyper["depth_range"] = {{"near", dataset.near}, {"far", dataset.far}};
    ck.hyper["scene"] = dataset.config.to_json();
    ck.adam = AdamSnapshot{adam.step_count(), adam.config(), adam.moments()};
    return ck;
  };

  for (int step = 1; step <= config.steps; ++step) {
    if (config.lr_schedule == "cosine") {
      const double f = config.lr_final_factor;
      const double c = 0.5 * (1.0 + std::cos(std::numbers::pi * (step - 1) / config.steps));
      adam.set_learning_rate(config.learning_rate * (f + (1.0 - f) * c));
    }
    adam.zero_grad();
    double loss_sum = 0.0;
    for (int b = 0; b < config.batch; ++b) {
      const SceneData& scene =
          dataset.scenes[static_cast<size_t>(uniform_int(rng, 0, static_cast<int>(dataset.scenes.size()) - 1))];
      const SequenceData& target_seq = scene.targets[static_cast<size_t>(uniform_int(rng, 0, 1))];
      int t0 = 0;
      for (int attempt = 0;; ++attempt) {
        t0 = uniform_int(rng, 1, T - config.unroll + 1);
        // The supervising frame must be the middle input frame of every window.
        bool paired = true;
        for (const Pass& p : passes) {
          for (int k = 0; k < config.unroll; ++k) {
            paired &= select_inputs(t0 + k, p.dilation, model_config.views, T).center() == t0 + k;
          }
        }
        if (paired) break;
        if (attempt > 1000) throw ConfigError("no training window satisfies the supervision pairing");
      }
      const int top = uniform_int(rng, 0, H - crop);
      const int left = uniform_int(rng, 0, W - crop);

      LatentState state;
      Tensor window_loss;
      for (const Pass& p : passes) {
        for (int k = 0; k < config.unroll; ++k) {
          const int t = t0 + k;
          const Camera target = crop_camera(target_seq.cameras[static_cast<size_t>(t - 1)], top, left, crop);
          if (!state.valid || !config.recurrent) state = model.initial_state(target);
          const StepInputs in = gather_inputs(scene.input, t, p.dilation, model_config.views);
          StepResult r = model.forward_step(in.frames, in.cameras, target, state, schedule);
          const Tensor truth = reshape(crop2d(target_seq.frame(t), top, left, crop, crop),
                                       Shape{1, 3, crop, crop});
          const Tensor loss = l1_loss(r.prediction, truth);
          const double value = loss.item();
          if (!std::isfinite(value)) {
            throw NumericalError("non-finite training loss at step " + std::to_string(step) +
                                 " (scene " + scene.name + ", t=" + std::to_string(t) +
                                 ", dilation " + std::to_string(p.dilation) + ")");
          }
          loss_sum += value;
          const Tensor weighted = scale(loss, weight);
          if (config.detach == DetachPolicy::kEveryStep) {
            weighted.backward();
            r.state.z = r.state.z.detach();
          } else {
            window_loss = window_loss.defined() ? add(window_loss, weighted) : weighted;
          }
          state = r.state;
        }
      }
      if (window_loss.defined()) window_loss.backward();
    }
    adam.step();
    const double mean_loss = loss_sum / (config.batch * terms);
    result.losses.push_back(mean_loss);
    if (options.log != nullptr && config.log_interval > 0 &&
        (step % config.log_interval == 0 || step == 1 || step == config.steps)) {
      char line[128];
      std::snprintf(line, sizeof(line), "step %6d  l1 %.6f  %.1fs\n", step, mean_loss,
                    seconds_since(start));
      *options.log << line << std::flush;
    }
    if (!options.checkpoint_path.empty() && config.checkpoint_interval > 0 &&
        step % config.checkpoint_interval == 0 && step != config.steps) {
      save_checkpoint(options.checkpoint_path, snapshot());
    }
  }
  result.checkpoint = snapshot();
  if (!options.checkpoint_path.empty()) save_checkpoint(options.checkpoint_path, result.checkpoint);
  result.seconds = seconds_since(start);
  return result;
}

DepthSchedule checkpoint_schedule(const Checkpoint& checkpoint, const ModelConfig& model,
                                  const Dataset* dataset) {
  if (checkpoint.hyper.contains("depth_range")) {
    const auto& r = checkpoint.hyper["depth_range"];
    return make_depth_schedule(r.at("near").get<double>(), r.at("far").get<double>(),
                               model.depth_planes);
  }
  if (dataset == nullptr) throw ConfigError("checkpoint has no depth range and no dataset was given");
  return make_depth_schedule(dataset->near, dataset->far, model.depth_planes);
}

RenderResult render_video(const GrvsModel& model, const SequenceData& input,
                          const TargetSpec& spec, const DepthSchedule& schedule, bool recurrent) {
  if (auto bad = validate_target_spec(spec, input.size())) {
    throw ConfigError("target spec entry " + std::to_string(*bad) +
                      " leaves the sequence or steps by more than one frame");
  }
  const std::vector<Pass> passes = iteration_passes(spec);
  GrvsModel net = cast_model<float>(model);
  net.set_requires_grad(false);
  const int V = net.config().views;

  RenderResult out;
  const auto start = Clock::now();
  LatentState state;
  for (const Pass& p : passes) {
    std::vector<Tensor> frames;
    for (const TargetEntry& e : spec.entries) {
      if (!state.valid || !recurrent) state = net.initial_state(e.camera);
      const StepInputs in = gather_inputs(input, e.t, p.dilation, V);
      StepResult r = net.forward_step(in.frames, in.cameras, e.camera, state, schedule);
      frames.push_back(reshape(r.prediction, Shape{3, r.prediction.dim(2), r.prediction.dim(3)}));
      state = std::move(r.state);
    }
    out.passes.push_back(std::move(frames));
  }
  out.seconds = seconds_since(start);
  out.frames = out.passes.back();
  out.fps = out.seconds > 0.0 ? static_cast<double>(out.frames.size()) / out.seconds : 0.0;
  return out;
}

Tensor clamp_image(const Tensor& x) {
  std::vector<float> v(x.data().begin(), x.data().end());
  for (float& f : v) f = std::clamp(f, 0.0f, 1.0f);
  return Tensor(x.shape(), std::move(v));
}

void MetricAccumulator::add(const Tensor& prediction, const Tensor& truth,
                            const std::vector<uint8_t>& dyn_mask) {
  const Tensor p = clamp_image(prediction);
  psnr_ += psnr(p, truth);
  ssim_ += ssim(p, truth);
  ++frames_;
  // Frames without a dynamic pixel at any SSIM window centre are left out of
  // the dynamic-only means.
  if (has_window_centre(dyn_mask, static_cast<int>(truth.dim(1)), static_cast<int>(truth.dim(2)))) {
    dyn_psnr_ += psnr(p, truth, &dyn_mask);
    dyn_ssim_ += ssim(p, truth, &dyn_mask);
    ++dyn_frames_;
  }
}

void MetricAccumulator::merge(const MetricAccumulator& o) {
  psnr_ += o.psnr_;
  ssim_ += o.ssim_;
  dyn_psnr_ += o.dyn_psnr_;
  dyn_ssim_ += o.dyn_ssim_;
  frames_ += o.frames_;
  dyn_frames_ += o.dyn_frames_;
}

MetricSummary MetricAccumulator::summary() const {
  MetricSummary s;
  s.frames = frames_;
  s.dyn_frames = dyn_frames_;
  if (frames_ > 0) {
    s.psnr = psnr_ / frames_;
    s.ssim = ssim_ / frames_;
  }
  if (dyn_frames_ > 0) {
    s.dyn_psnr = dyn_psnr_ / dyn_frames_;
    s.dyn_ssim = dyn_ssim_ / dyn_frames_;
  }
  return s;
}

EvalReport evaluate(const GrvsModel& model, const Dataset& dataset, const EvalConfig& config,
                    const DepthSchedule& schedule) {
  if (dataset.width() % model.config().patch != 0 || dataset.height() % model.config().patch != 0) {
    throw ConfigError("dataset resolution is not divisible by model.F");
  }
  TargetSpec probe;
  probe.dilations = config.dilations;
  const size_t pass_count = iteration_passes(probe).size();
  const int T = dataset.frames();
  const int N = config.max_frames > 0 ? std::min(config.max_frames, T) : T;
  const int frozen = config.bullet_time > 0 ? config.bullet_time : (T + 1) / 2;
  if (config.mode == EvalMode::kBulletTime && (frozen < 1 || frozen > T)) {
    throw ConfigError("bullet time " + std::to_string(frozen) + " outside [1, " + std::to_string(T) + "]");
  }

  EvalReport report;
  report.config = config;
  report.scenes = static_cast<int>(dataset.scenes.size());
  std::array<std::vector<MetricAccumulator>, 2> per_target;
  for (auto& v : per_target) v.resize(pass_count);
  double seconds = 0.0;

  for (const SceneData& scene : dataset.scenes) {
    for (size_t j = 0; j < 2; ++j) {
      const SequenceData& seq = scene.targets[j];
      const std::vector<Camera> cams(seq.cameras.begin(), seq.cameras.begin() + N);
      const TargetSpec spec = config.mode == EvalMode::kBulletTime
                                  ? bullet_time_spec(frozen, cams, config.dilations)
                                  : synchronized_spec(cams, config.dilations);
      std::vector<std::vector<Tensor>> passes;
      if (config.ground_truth) {
        std::vector<Tensor> truth;
        for (const TargetEntry& e : spec.entries) truth.push_back(seq.frame(e.t));
        passes.assign(pass_count, truth);
      } else {
        RenderResult r = render_video(model, scene.input, spec, schedule, config.recurrent);
        seconds += r.seconds;
        passes = std::move(r.passes);
      }
      for (size_t p = 0; p < pass_count; ++p) {
        for (size_t i = 0; i < spec.entries.size(); ++i) {
          const int t = spec.entries[i].t;
          per_target[j][p].add(passes[p][i], seq.frame(t), seq.mask(t));
        }
      }
      report.frames += N;
    }
  }

  MetricAccumulator all_final;
  std::vector<MetricAccumulator> pooled(pass_count);
  for (size_t j = 0; j < 2; ++j) {
    TargetReport tr;
    tr.camera = j == 0 ? "target1" : "target2";
    for (size_t p = 0; p < pass_count; ++p) {
      tr.passes.push_back({config.dilations[p], per_target[j][p].summary()});
      pooled[p].merge(per_target[j][p]);
    }
    tr.final_metrics = tr.passes.back().metrics;
    all_final.merge(per_target[j].back());
    report.targets.push_back(std::move(tr));
  }
  for (size_t p = 0; p < pass_count; ++p) report.passes.push_back({config.dilations[p], pooled[p].summary()});
  report.aggregate = all_final.summary();
  report.seconds = seconds;
  report.fps = seconds > 0.0 ? report.frames / seconds : 0.0;
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json targets_json = nlohmann::json::array();
  for (const TargetReport& t : targets) {
    targets_json.push_back(
        {{"camera", t.camera}, {"metrics", summary_json(t.final_metrics)}, {"passes", passes_json(t.passes)}});
  }
  const bool bullet = config.mode == EvalMode::kBulletTime;
  return {{"schema", "grvs-eval-1"},
          {"mode", bullet ? "bullet_time" : "synchronized"},
          {"bullet_time", bullet ? nlohmann::json(config.bullet_time) : nlohmann::json(nullptr)},
          {"dilations", config.dilations},
          {"recurrent", config.recurrent},
          {"ground_truth", config.ground_truth},
          {"scenes", scenes},
          {"frames", frames},
          {"runtime_seconds", seconds},
          {"fps", fps},
          {"aggregate", summary_json(aggregate)},
          {"passes", passes_json(passes)},
          {"targets", targets_json}};
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  char line[160];
  auto fmt = [](const std::optional<double>& v, const char* f) {
    char b[32];
    if (!v) return std::string("-");
    std::snprintf(b, sizeof(b), f, *v);
    return std::string(b);
  };
  std::snprintf(line, sizeof(line), "%-10s %-6s | %9s %9s | %9s %9s | %6s %6s\n", "camera", "pass",
                "PSNR", "SSIM", "dyn PSNR", "dyn SSIM", "frames", "dyn");
  os << line;
  auto row = [&](const std::string& cam, const std::string& pass, const MetricSummary& m) {
    std::snprintf(line, sizeof(line), "%-10s %-6s | %9.3f %9.4f | %9s %9s | %6d %6d\n", cam.c_str(),
                  pass.c_str(), m.psnr, m.ssim, fmt(m.dyn_psnr, "%.3f").c_str(),
                  fmt(m.dyn_ssim, "%.4f").c_str(), m.frames, m.dyn_frames);
    os << line;
  };
  for (const TargetReport& t : targets) {
    for (const PassReport& p : t.passes) row(t.camera, "d=" + std::to_string(p.dilation), p.metrics);
  }
  row("all", "final", aggregate);
  std::snprintf(line, sizeof(line), "%d frames in %.2fs (%.2f fps)\n", frames, seconds, fps);
  os << line;
  return os.str();
}

}  // namespace grvs
