#include "grvs/model.hpp"

#include <cmath>

#include "grvs/errors.hpp"
#include "grvs/ops.hpp"

namespace grvs {

void ModelConfig::validate() const {
  if (channels < 2 || channels % 2 != 0) throw ConfigError("model.C must be even and >= 2");
  if (depth_planes < 2) throw ConfigError("model.D must be >= 2");
  if (patch != 1 && patch != 2 && patch != 4) throw ConfigError("model.F must be 1, 2 or 4");
  if (views < 1 || views % 2 == 0) throw ConfigError("model.V must be odd");
  if (unet_levels < 1) throw ConfigError("model.unet_levels must be >= 1");
  if (depth_group != 1 && depth_group != 2) throw ConfigError("model.depth_group must be 1 or 2");
  if (depth_planes % depth_group != 0) {
    throw ConfigError("model.D must be divisible by model.depth_group");
  }
}

nlohmann::json ModelConfig::to_json() const {
  return {{"C", channels},          {"D", depth_planes},       {"F", patch},
          {"V", views},             {"unet_levels", unet_levels}, {"depth_group", depth_group},
          {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.channels = j.at("C").get<int>();
    c.depth_planes = j.at("D").get<int>();
    c.patch = j.at("F").get<int>();
    c.views = j.at("V").get<int>();
    c.unet_levels = j.at("unet_levels").get<int>();
    c.depth_group = j.at("depth_group").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

int64_t halve_depth(int64_t d) { return d > 1 ? (d - 1) / 2 + 1 : 1; }

}  // namespace

template <typename T>
GrvsModelT<T>::GrvsModelT(ModelConfig config) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  const int64_t C = config_.channels;
  const int64_t F = config_.patch;
  const int64_t V = config_.views;
  const int64_t g = config_.depth_group;
  const int L = config_.unet_levels;

  add_parameter("patchify.weight", {C, 3 * V, F, F}, 3 * V * F * F, 1.0, rng);
  add_parameter("patchify.bias", {C}, 0, 0.0, rng);

  std::vector<int64_t> width(static_cast<size_t>(L));
  std::vector<int64_t> skip_depth(static_cast<size_t>(L));
  int64_t in = 2 * C * g;
  int64_t depth = config_.depth_planes / g;
  for (int l = 0; l < L; ++l) {
    const int64_t w = C << l;
    width[static_cast<size_t>(l)] = w;
    const std::string p = "unet.enc" + std::to_string(l);
    add_parameter(p + ".conv_a.weight", {w, in, 3, 3, 3}, in * 27, kLeakyGain, rng);
    add_parameter(p + ".conv_a.bias", {w}, 0, 0.0, rng);
    add_parameter(p + ".conv_b.weight", {w, w, 3, 3, 3}, w * 27, kLeakyGain, rng);
    add_parameter(p + ".conv_b.bias", {w}, 0, 0.0, rng);
    depth = halve_depth(depth);
    skip_depth[static_cast<size_t>(l)] = depth;
    in = w;
  }
  const int64_t wl = width.back();
  add_parameter("unet.bottleneck.weight", {wl, wl, depth, 1, 1}, wl * depth, kLeakyGain, rng);
  add_parameter("unet.bottleneck.bias", {wl}, 0, 0.0, rng);
  for (int l = L - 2; l >= 0; --l) {
    const int64_t w = width[static_cast<size_t>(l)];
    const int64_t up = width[static_cast<size_t>(l + 1)];
    const int64_t sd = skip_depth[static_cast<size_t>(l)];
    const std::string p = "unet.dec" + std::to_string(l);
    add_parameter(p + ".skip.weight", {w, w, sd, 1, 1}, w * sd, 1.0, rng);
    add_parameter(p + ".skip.bias", {w}, 0, 0.0, rng);
    add_parameter(p + ".conv_a.weight", {w, up + w, 1, 3, 3}, (up + w) * 9, kLeakyGain, rng);
    add_parameter(p + ".conv_a.bias", {w}, 0, 0.0, rng);
    add_parameter(p + ".conv_b.weight", {w, w, 1, 3, 3}, w * 9, kLeakyGain, rng);
    add_parameter(p + ".conv_b.bias", {w}, 0, 0.0, rng);
  }
  add_parameter("unet.out.weight", {C, width.front(), 1, 1, 1}, width.front(), 1.0, rng);
  add_parameter("unet.out.bias", {C}, 0, 0.0, rng);

  add_parameter("unpatchify.weight", {3 * F * F, C, 1, 1}, C, 1.0, rng);
  add_parameter("unpatchify.bias", {3 * F * F}, 0, 0.0, rng);
}

template <typename T>
TensorT<T> GrvsModelT<T>::add_parameter(std::string name, Shape shape, int64_t fan_in,
                                        double gain, std::mt19937_64& rng) {
  // Variance-preserving uniform init, std = gain / sqrt(fan_in); gain 0 gives zeros.
  const double bound = gain == 0.0 ? 0.0 : gain * std::sqrt(3.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<T> values(static_cast<size_t>(numel(shape)));
  if (bound > 0.0) {
    for (T& v : values) v = static_cast<T>(dist(rng));
  }
  TensorT<T> t(std::move(shape), std::move(values), true);
  params_.emplace_back(std::move(name), t);
  return t;
}

template <typename T>
std::vector<TensorT<T>> GrvsModelT<T>::parameter_tensors() const {
  std::vector<TensorT<T>> out;
  for (const auto& [name, t] : params_) out.push_back(t);
  return out;
}

template <typename T>
const TensorT<T>& GrvsModelT<T>::parameter(const std::string& name) const {
  for (const auto& [n, t] : params_) {
    if (n == name) return t;
  }
  throw ConfigError("model has no parameter named " + name);
}

template <typename T>
TensorT<T>& GrvsModelT<T>::parameter(const std::string& name) {
  for (auto& [n, t] : params_) {
    if (n == name) return t;
  }
  throw ConfigError("model has no parameter named " + name);
}

template <typename T>
int64_t GrvsModelT<T>::parameter_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

template <typename T>
void GrvsModelT<T>::set_requires_grad(bool on) {
  for (auto& [name, t] : params_) t.set_requires_grad(on);
}

template <typename T>
TensorT<T> GrvsModelT<T>::conv(const std::string& name, const TensorT<T>& x,
                               const std::array<int, 3>& stride,
                               const std::array<int, 3>& padding) const {
  Conv3dOptions opt;
  opt.stride = stride;
  opt.padding = padding;
  return conv3d(x, parameter(name + ".weight"), parameter(name + ".bias"), opt);
}

template <typename T>
void GrvsModelT<T>::replace_parameter(const std::string& name, TensorT<T> value) {
  TensorT<T>& dst = parameter(name);
  if (dst.shape() != value.shape()) {
    throw ShapeError("parameter " + name + " has shape " + to_string(dst.shape()) + ", got " +
                     to_string(value.shape()));
  }
  dst = std::move(value);
}

template <typename T>
TensorT<T> GrvsModelT<T>::patchify(const PlaneSweepVolumeT<T>& psv) const {
  const Shape& s = psv.data.shape();
  if (s.size() != 5 || s[2] != 3) throw ShapeError("patchify: PSV must be D x V x 3 x H x W");
  if (s[0] != config_.depth_planes || s[1] != config_.views) {
    throw ShapeError("patchify: PSV " + to_string(s) + " does not match D=" +
                     std::to_string(config_.depth_planes) + ", V=" + std::to_string(config_.views));
  }
  const int F = config_.patch;
  if (s[3] % F != 0 || s[4] % F != 0) {
    throw ShapeError("patchify: spatial size " + to_string(s) + " not divisible by F=" +
                     std::to_string(F));
  }
  TensorT<T> folded = reshape(psv.data, Shape{s[0], s[1] * 3, s[3], s[4]});
  return conv2d(folded, parameter("patchify.weight"), parameter("patchify.bias"), F, 0);
}

template <typename T>
LatentStateT<T> GrvsModelT<T>::initial_state(const Camera& target) const {
  const int F = config_.patch;
  if (target.width() % F != 0 || target.height() % F != 0) {
    throw ShapeError("target size not divisible by F=" + std::to_string(F));
  }
  LatentStateT<T> s;
  s.z = TensorT<T>::zeros(Shape{1, config_.channels, target.height() / F, target.width() / F});
  s.camera = target;
  s.valid = false;
  return s;
}

template <typename T>
TensorT<T> GrvsModelT<T>::reproject_state(const LatentStateT<T>& state, const Camera& new_target,
                                          const DepthSchedule& schedule) const {
  const int F = config_.patch;
  const int64_t C = config_.channels;
  const int64_t D = schedule.count();
  Camera dst = new_target;
  dst.intrinsics = new_target.intrinsics.downscaled(F);
  const int64_t h = dst.height();
  const int64_t w = dst.width();
  if (!state.valid) return TensorT<T>::zeros(Shape{D, C, h, w});
  if (state.z.shape() != Shape{1, C, state.camera.height() / F, state.camera.width() / F}) {
    throw ShapeError("reproject_state: latent shape " + to_string(state.z.shape()) +
                     " does not match its camera");
  }
  Camera src = state.camera;
  src.intrinsics = state.camera.intrinsics.downscaled(F);
  const TensorT<T> z = reshape(state.z, Shape{C, src.height(), src.width()});
  std::vector<TensorT<T>> slices;
  slices.reserve(static_cast<size_t>(D));
  for (double depth : schedule.depths) {
    slices.push_back(bilinear_sample(z, plane_warp_grid(src, dst, depth)));
  }
  return stack(slices);
}

template <typename T>
LatentStateT<T> GrvsModelT<T>::latent_render(const TensorT<T>& y, const TensorT<T>& z_prev,
                                             const Camera& target) const {
  const int64_t C = config_.channels;
  const int64_t D = config_.depth_planes;
  const Shape& ys = y.shape();
  if (ys.size() != 4 || ys[0] != D || ys[1] != C) {
    throw ShapeError("latent_render: y must be D x C x h x w, got " + to_string(ys));
  }
  if (z_prev.shape() != ys) {
    throw ShapeError("latent_render: state " + to_string(z_prev.shape()) + " vs y " +
                     to_string(ys));
  }
  const int64_t h = ys[2];
  const int64_t w = ys[3];
  const int L = config_.unet_levels;
  const int64_t scale_div = int64_t{1} << (L - 1);
  if (h % scale_div != 0 || w % scale_div != 0) {
    throw ShapeError("latent_render: latent size " + std::to_string(h) + "x" + std::to_string(w) +
                     " not divisible by " + std::to_string(scale_div));
  }
  const T slope = static_cast<T>(kLeakySlope);

  // D x 2C x h x w -> 1 x 2C x D x h x w
  TensorT<T> x = permute(concat<T>({y, z_prev}, 1), {1, 0, 2, 3});
  const int64_t g = config_.depth_group;
  if (g == 1) {
    x = reshape(x, Shape{1, 2 * C, D, h, w});
  } else {
    // fold consecutive plane pairs into channels: channel c*g + j <- plane k*g + j
    x = reshape(x, Shape{2 * C, D / g, g, h, w});
    x = permute(x, {0, 2, 1, 3, 4});
    x = reshape(x, Shape{1, 2 * C * g, D / g, h, w});
  }

  std::vector<TensorT<T>> skips;
  for (int l = 0; l < L; ++l) {
    if (l > 0) x = avgpool_2x(x);
    const std::string p = "unet.enc" + std::to_string(l);
    const int sd = x.dim(2) > 1 ? 2 : 1;
    x = leaky_relu(conv(p + ".conv_a", x, {sd, 1, 1}, {1, 1, 1}), slope);
    x = leaky_relu(conv(p + ".conv_b", x, {1, 1, 1}, {1, 1, 1}), slope);
    skips.push_back(x);
  }
  x = leaky_relu(conv("unet.bottleneck", x, {1, 1, 1}, {0, 0, 0}), slope);
  for (int l = L - 2; l >= 0; --l) {
    const std::string p = "unet.dec" + std::to_string(l);
    x = resize_bilinear_2x(x);
    TensorT<T> skip = conv(p + ".skip", skips[static_cast<size_t>(l)], {1, 1, 1}, {0, 0, 0});
    x = concat<T>({x, skip}, 1);
    x = leaky_relu(conv(p + ".conv_a", x, {1, 1, 1}, {0, 1, 1}), slope);
    x = leaky_relu(conv(p + ".conv_b", x, {1, 1, 1}, {0, 1, 1}), slope);
  }
  x = conv("unet.out", x, {1, 1, 1}, {0, 0, 0});

  LatentStateT<T> state;
  state.z = reshape(x, Shape{1, C, h, w});
  state.camera = target;
  state.valid = true;
  return state;
}

template <typename T>
TensorT<T> GrvsModelT<T>::unpatchify(const LatentStateT<T>& state) const {
  const TensorT<T> rgb = conv2d(state.z, parameter("unpatchify.weight"),
                                parameter("unpatchify.bias"), 1, 0);
  return pixel_shuffle(rgb, config_.patch);
}

template <typename T>
StepResultT<T> GrvsModelT<T>::forward_step(std::span<const TensorT<T>> frames,
                                           std::span<const Camera> cameras,
                                           const Camera& target, const LatentStateT<T>& state,
                                           const DepthSchedule& schedule) const {
  if (static_cast<int>(frames.size()) != config_.views) {
    throw ShapeError("forward_step: expected " + std::to_string(config_.views) + " views, got " +
                     std::to_string(frames.size()));
  }
  if (schedule.count() != config_.depth_planes) {
    throw ShapeError("forward_step: depth schedule has " + std::to_string(schedule.count()) +
                     " planes, model expects " + std::to_string(config_.depth_planes));
  }
  const PlaneSweepVolumeT<T> psv = build_dynamic_psv(frames, cameras, target, schedule);
  const TensorT<T> y = patchify(psv);
  const TensorT<T> z_prev = reproject_state(state, target, schedule);
  StepResultT<T> out;
  out.state = latent_render(y, z_prev, target);
  out.prediction = unpatchify(out.state);
  return out;
}

template class GrvsModelT<float>;
template class GrvsModelT<double>;

Checkpoint model_to_checkpoint(const GrvsModel& model) {
  Checkpoint ck;
  for (const auto& [name, t] : model.parameters()) ck.params.emplace_back(name, t.detach());
  ck.hyper["model"] = model.config().to_json();
  return ck;
}

GrvsModel model_from_checkpoint(const Checkpoint& checkpoint) {
  if (!checkpoint.hyper.contains("model")) {
    throw ConfigError("checkpoint has no model configuration");
  }
  GrvsModel model(ModelConfig::from_json(checkpoint.hyper["model"]));
  if (checkpoint.params.size() != model.parameters().size()) {
    throw ConfigError("checkpoint parameter count does not match the model configuration");
  }
  for (const auto& [name, t] : checkpoint.params) {
    Tensor& dst = model.parameter(name);
    if (dst.shape() != t.shape()) {
      throw ConfigError("checkpoint parameter " + name + " has shape " + to_string(t.shape()) +
                        ", model expects " + to_string(dst.shape()));
    }
    std::copy(t.data().begin(), t.data().end(), dst.mutable_data().begin());
  }
  return model;
}

}  // namespace grvs
