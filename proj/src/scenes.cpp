#include "grvs/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "grvs/errors.hpp"

namespace grvs {

namespace {

using Eigen::Vector3d;

Vector3d vec_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw ConfigError("expected a 3-vector");
  return {v[0], v[1], v[2]};
}

nlohmann::json vec_to_json(const Vector3d& v) { return std::vector<double>{v.x(), v.y(), v.z()}; }

nlohmann::json spherical_to_json(const SphericalCoords& s) {
  return {{"radius", s.radius}, {"azimuth", s.azimuth}, {"elevation", s.elevation}};
}

SphericalCoords spherical_from_json(const nlohmann::json& j) {
  return {j.at("radius").get<double>(), j.at("azimuth").get<double>(),
          j.at("elevation").get<double>()};
}

uint32_t hash32(uint32_t x) {
  x ^= x >> 16;
  x *= 0x7feb352dU;
  x ^= x >> 15;
  x *= 0x846ca68bU;
  x ^= x >> 16;
  return x;
}

double lattice(uint32_t seed, int64_t i, int64_t j) {
  const uint32_t h = hash32(seed ^ hash32(static_cast<uint32_t>(i) * 0x9e3779b1U ^
                                          hash32(static_cast<uint32_t>(j) + 0x632be5abU)));
  return static_cast<double>(h) / 4294967296.0;
}

double smooth(double f) { return f * f * (3.0 - 2.0 * f); }

// Value noise in [0, 1), continuous in (s, t).
double value_noise(uint32_t seed, double s, double t) {
  const double fs = std::floor(s);
  const double ft = std::floor(t);
  const int64_t i = static_cast<int64_t>(fs);
  const int64_t j = static_cast<int64_t>(ft);
  const double a = smooth(s - fs);
  const double b = smooth(t - ft);
  const double v00 = lattice(seed, i, j);
  const double v10 = lattice(seed, i + 1, j);
  const double v01 = lattice(seed, i, j + 1);
  const double v11 = lattice(seed, i + 1, j + 1);
  return (1 - b) * ((1 - a) * v00 + a * v10) + b * ((1 - a) * v01 + a * v11);
}

// Unlit surface colour at face coordinates (s, t), world units.
Vector3d surface_color(uint32_t seed, const Vector3d& base, double s, double t, double scale) {
  const double n1 = value_noise(seed, s / scale, t / scale);
  const double n2 = value_noise(seed ^ 0x5bd1e995U, s / (2.7 * scale), t / (2.7 * scale));
  const double waves = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * s / (3.0 * scale)) *
                                 std::sin(2.0 * std::numbers::pi * t / (3.0 * scale));
  const double lum = 0.3 + 0.7 * (0.5 * n1 + 0.2 * n2 + 0.3 * waves);
  Vector3d c;
  for (int k = 0; k < 3; ++k) {
    const double tint = value_noise(seed + 101U * static_cast<uint32_t>(k + 1), s / (1.6 * scale),
                                    t / (1.6 * scale));
    c[k] = std::clamp(base[k] * lum * (0.75 + 0.5 * tint), 0.0, 1.0);
  }
  return c;
}

// Slab test against an axis-aligned box. Returns entry distance, or +inf.
double ray_box_entry(const Vector3d& o, const Vector3d& inv_d, const Vector3d& lo,
                     const Vector3d& hi, int& axis, double& sign) {
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  axis = 0;
  sign = 1.0;
  for (int k = 0; k < 3; ++k) {
    double t0 = (lo[k] - o[k]) * inv_d[k];
    double t1 = (hi[k] - o[k]) * inv_d[k];
    double s = -1.0;  // entering through the low face
    if (t0 > t1) {
      std::swap(t0, t1);
      s = 1.0;
    }
    if (t0 > t_enter) {
      t_enter = t0;
      axis = k;
      sign = s;
    }
    t_exit = std::min(t_exit, t1);
  }
  if (t_enter > t_exit || t_enter <= 1e-9) return std::numeric_limits<double>::infinity();
  return t_enter;
}

std::pair<double, double> face_coords(const Vector3d& p, int axis) {
  switch (axis) {
    case 0:
      return {p.y(), p.z()};
    case 1:
      return {p.x(), p.z()};
    default:
      return {p.x(), p.y()};
  }
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

void SceneConfig::validate() const {
  if (width < 1 || height < 1) throw ConfigError("scene resolution must be positive");
  if (frames < 2) throw ConfigError("scenes need at least 2 frames");
  if (statics < 0 || dynamics < 0) throw ConfigError("object counts must be non-negative");
  if (supersample < 1) throw ConfigError("supersample must be >= 1");
  if (!(texture_scale > 0.0)) throw ConfigError("texture_scale must be positive");
  if (!(min_object_size > 0.0) || max_object_size < min_object_size) {
    throw ConfigError("invalid object size range");
  }
  if (max_object_size / 2.0 >= placement_radius) {
    throw ConfigError("objects cannot fit inside the placement bounds");
  }
  if (min_speed < 0.0 || max_speed < min_speed) throw ConfigError("invalid speed range");
  if (!(min_camera_radius > 0.0) || max_camera_radius < min_camera_radius) {
    throw ConfigError("invalid camera radius range");
  }
  if (max_camera_radius + 0.5 >= room_half_extent) {
    throw ConfigError("cameras must stay inside the room");
  }
  if (focal_factor <= 0.0) throw ConfigError("focal_factor must be positive");
}

nlohmann::json SceneConfig::to_json() const {
  return {{"width", width},
          {"height", height},
          {"frames", frames},
          {"statics", statics},
          {"dynamics", dynamics},
          {"focal_factor", focal_factor},
          {"room_half_extent", room_half_extent},
          {"room_height", room_height},
          {"placement_radius", placement_radius},
          {"min_object_size", min_object_size},
          {"max_object_size", max_object_size},
          {"min_speed", min_speed},
          {"max_speed", max_speed},
          {"min_camera_radius", min_camera_radius},
          {"max_camera_radius", max_camera_radius},
          {"min_elevation", min_elevation},
          {"max_elevation", max_elevation},
          {"min_sweep", min_sweep},
          {"max_sweep", max_sweep},
          {"target_elevation_offsets", target_elevation_offsets},
          {"supersample", supersample},
          {"texture_scale", texture_scale},
          {"look_at", vec_to_json(look_at)}};
}

SceneConfig SceneConfig::from_json(const nlohmann::json& j) {
  SceneConfig c;
  try {
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.frames = j.at("frames").get<int>();
    c.statics = j.at("statics").get<int>();
    c.dynamics = j.at("dynamics").get<int>();
    c.focal_factor = j.at("focal_factor").get<double>();
    c.room_half_extent = j.at("room_half_extent").get<double>();
    c.room_height = j.at("room_height").get<double>();
    c.placement_radius = j.at("placement_radius").get<double>();
    c.min_object_size = j.at("min_object_size").get<double>();
    c.max_object_size = j.at("max_object_size").get<double>();
    c.min_speed = j.at("min_speed").get<double>();
    c.max_speed = j.at("max_speed").get<double>();
    c.min_camera_radius = j.at("min_camera_radius").get<double>();
    c.max_camera_radius = j.at("max_camera_radius").get<double>();
    c.min_elevation = j.at("min_elevation").get<double>();
    c.max_elevation = j.at("max_elevation").get<double>();
    c.min_sweep = j.at("min_sweep").get<double>();
    c.max_sweep = j.at("max_sweep").get<double>();
    c.target_elevation_offsets = j.at("target_elevation_offsets").get<std::array<double, 2>>();
    c.supersample = j.at("supersample").get<int>();
    c.texture_scale = j.at("texture_scale").get<double>();
    c.look_at = vec_from_json(j.at("look_at"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scene config: ") + e.what());
  }
  c.validate();
  return c;
}

CameraIntrinsics SceneConfig::intrinsics() const {
  CameraIntrinsics k;
  k.fx = focal_factor * width;
  k.fy = focal_factor * width;
  k.cx = (width - 1) / 2.0;
  k.cy = (height - 1) / 2.0;
  k.width = width;
  k.height = height;
  return k;
}

int SceneSpec::static_count() const {
  return static_cast<int>(std::count_if(objects.begin(), objects.end(),
                                        [](const SceneObject& o) { return !o.dynamic; }));
}

int SceneSpec::dynamic_count() const {
  return static_cast<int>(objects.size()) - static_count();
}

nlohmann::json SceneSpec::to_json() const {
  nlohmann::json objs = nlohmann::json::array();
  for (const auto& o : objects) {
    objs.push_back({{"center", vec_to_json(o.center)},
                    {"half_size", vec_to_json(o.half_size)},
                    {"velocity", vec_to_json(o.velocity)},
                    {"color", vec_to_json(o.color)},
                    {"texture_seed", o.texture_seed},
                    {"dynamic", o.dynamic}});
  }
  return {{"seed", seed},
          {"frames", frames},
          {"background_seed", background_seed},
          {"objects", objs},
          {"trajectory_start", spherical_to_json(trajectory_start)},
          {"trajectory_end", spherical_to_json(trajectory_end)},
          {"targets", {spherical_to_json(targets[0]), spherical_to_json(targets[1])}}};
}

SceneSpec SceneSpec::from_json(const nlohmann::json& j) {
  SceneSpec s;
  try {
    s.seed = j.at("seed").get<uint64_t>();
    s.frames = j.at("frames").get<int>();
    s.background_seed = j.at("background_seed").get<uint32_t>();
    for (const auto& o : j.at("objects")) {
      SceneObject obj;
      obj.center = vec_from_json(o.at("center"));
      obj.half_size = vec_from_json(o.at("half_size"));
      obj.velocity = vec_from_json(o.at("velocity"));
      obj.color = vec_from_json(o.at("color"));
      obj.texture_seed = o.at("texture_seed").get<uint32_t>();
      obj.dynamic = o.at("dynamic").get<bool>();
      s.objects.push_back(obj);
    }
    s.trajectory_start = spherical_from_json(j.at("trajectory_start"));
    s.trajectory_end = spherical_from_json(j.at("trajectory_end"));
    s.targets[0] = spherical_from_json(j.at("targets").at(0));
    s.targets[1] = spherical_from_json(j.at("targets").at(1));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scene spec: ") + e.what());
  }
  return s;
}

SceneSpec sample_scene(uint64_t seed, const SceneConfig& config) {
  config.validate();
  std::mt19937_64 rng(seed);
  SceneSpec spec;
  spec.seed = seed;
  spec.frames = config.frames;
  spec.background_seed = static_cast<uint32_t>(rng());

  const double bound = config.placement_radius;
  auto random_color = [&] {
    return Vector3d(uniform(rng, 0.2, 1.0), uniform(rng, 0.2, 1.0), uniform(rng, 0.2, 1.0));
  };

  for (int i = 0; i < config.statics; ++i) {
    SceneObject o;
    const double sx = uniform(rng, config.min_object_size, config.max_object_size) / 2.0;
    const double sy = uniform(rng, config.min_object_size, config.max_object_size) / 2.0;
    const double sz = uniform(rng, config.min_object_size, 1.6 * config.max_object_size) / 2.0;
    o.half_size = {sx, sy, sz};
    // roughly a third of the statics are thin upright panels
    if (uniform(rng, 0.0, 1.0) < 0.3) o.half_size[rng() % 2] = 0.03;
    o.center = {uniform(rng, -bound + o.half_size.x(), bound - o.half_size.x()),
                uniform(rng, -bound + o.half_size.y(), bound - o.half_size.y()), o.half_size.z()};
    o.color = random_color();
    o.texture_seed = static_cast<uint32_t>(rng());
    spec.objects.push_back(o);
  }

  for (int i = 0; i < config.dynamics; ++i) {
    SceneObject o;
    o.dynamic = true;
    const double s = uniform(rng, config.min_object_size, config.max_object_size) / 2.0;
    o.half_size = {s, s, s};
    o.color = random_color();
    o.texture_seed = static_cast<uint32_t>(rng());
    const double limit = bound - s;
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      o.center = {uniform(rng, -limit, limit), uniform(rng, -limit, limit), s};
      const double speed = uniform(rng, config.min_speed, config.max_speed);
      const double heading = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      o.velocity = {speed * std::cos(heading), speed * std::sin(heading), 0.0};
      const Vector3d end = o.center_at(config.frames);
      placed = std::abs(end.x()) <= limit && std::abs(end.y()) <= limit;
    }
    if (!placed) {
      throw ConfigError("cannot keep a dynamic object inside the bounds for " +
                        std::to_string(config.frames) + " frames at the configured speeds");
    }
    spec.objects.push_back(o);
  }

  const double theta0 = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double sweep = uniform(rng, config.min_sweep, config.max_sweep) *
                       (uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0);
  spec.trajectory_start = {uniform(rng, config.min_camera_radius, config.max_camera_radius),
                           theta0, uniform(rng, config.min_elevation, config.max_elevation)};
  spec.trajectory_end = {uniform(rng, config.min_camera_radius, config.max_camera_radius),
                         theta0 + sweep,
                         uniform(rng, config.min_elevation, config.max_elevation)};
  const SphericalCoords mid{(spec.trajectory_start.radius + spec.trajectory_end.radius) / 2.0,
                            (spec.trajectory_start.azimuth + spec.trajectory_end.azimuth) / 2.0,
                            (spec.trajectory_start.elevation + spec.trajectory_end.elevation) / 2.0};
  for (int k = 0; k < 2; ++k) {
    spec.targets[static_cast<size_t>(k)] = mid;
    spec.targets[static_cast<size_t>(k)].elevation += config.target_elevation_offsets[static_cast<size_t>(k)];
  }
  return spec;
}

SceneSpec freeze_dynamics(const SceneSpec& spec) {
  SceneSpec out = spec;
  for (auto& o : out.objects) o.velocity.setZero();
  return out;
}

SceneSpec without_dynamics(const SceneSpec& spec) {
  SceneSpec out = spec;
  std::erase_if(out.objects, [](const SceneObject& o) { return o.dynamic; });
  return out;
}

Camera camera_at(const SphericalCoords& c, const Vector3d& centre,
                 const CameraIntrinsics& intrinsics) {
  if (!(c.radius > 0.0)) throw GeometryError("camera radius must be positive");
  const Vector3d offset(c.radius * std::cos(c.elevation) * std::cos(c.azimuth),
                        c.radius * std::cos(c.elevation) * std::sin(c.azimuth),
                        c.radius * std::sin(c.elevation));
  Camera cam;
  cam.intrinsics = intrinsics;
  cam.pose = look_at(centre + offset, centre, Vector3d::UnitZ());
  return cam;
}

std::vector<Camera> camera_trajectory(const SphericalCoords& start, const SphericalCoords& end,
                                      int frames, const Vector3d& centre,
                                      const CameraIntrinsics& intrinsics) {
  if (frames < 2) throw GeometryError("a trajectory needs at least 2 frames");
  std::vector<Camera> cams;
  cams.reserve(static_cast<size_t>(frames));
  for (int i = 0; i < frames; ++i) {
    const double a = static_cast<double>(i) / static_cast<double>(frames - 1);
    const SphericalCoords c{start.radius + a * (end.radius - start.radius),
                            start.azimuth + a * (end.azimuth - start.azimuth),
                            start.elevation + a * (end.elevation - start.elevation)};
    cams.push_back(camera_at(i == frames - 1 ? end : c, centre, intrinsics));
  }
  return cams;
}

SceneCameras scene_cameras(const SceneSpec& scene, const SceneConfig& config) {
  SceneCameras out;
  const CameraIntrinsics k = config.intrinsics();
  out.input = camera_trajectory(scene.trajectory_start, scene.trajectory_end, scene.frames,
                                config.look_at, k);
  for (size_t j = 0; j < 2; ++j) {
    out.targets[j].assign(static_cast<size_t>(scene.frames),
                          camera_at(scene.targets[j], config.look_at, k));
  }
  return out;
}

SurfaceHit trace_ray(const SceneSpec& scene, const SceneConfig& config, const Vector3d& origin,
                     const Vector3d& direction, int t) {
  const Vector3d inv(1.0 / direction.x(), 1.0 / direction.y(), 1.0 / direction.z());
  SurfaceHit hit;
  hit.distance = std::numeric_limits<double>::infinity();
  const SceneObject* best = nullptr;
  int best_axis = 0;
  for (const SceneObject& o : scene.objects) {
    const Vector3d c = o.center_at(t);
    int axis = 0;
    double sign = 1.0;
    const double d = ray_box_entry(origin, inv, c - o.half_size, c + o.half_size, axis, sign);
    if (d < hit.distance) {
      hit.distance = d;
      best = &o;
      best_axis = axis * 2 + (sign > 0 ? 1 : 0);
    }
  }
  if (best != nullptr) {
    hit.point = origin + hit.distance * direction;
    const Vector3d local = hit.point - best->center_at(t);
    const auto [s, u] = face_coords(local, best_axis / 2);
    hit.color = surface_color(best->texture_seed * 6U + static_cast<uint32_t>(best_axis),
                              best->color, s, u, config.texture_scale);
    hit.dynamic = best->dynamic;
    return hit;
  }

  // Exit point of the room box from the inside.
  const Vector3d lo(-config.room_half_extent, -config.room_half_extent, 0.0);
  const Vector3d hi(config.room_half_extent, config.room_half_extent, config.room_height);
  double t_exit = std::numeric_limits<double>::infinity();
  int face = 0;
  for (int k = 0; k < 3; ++k) {
    if (direction[k] == 0.0) continue;
    const double tk = ((direction[k] > 0 ? hi[k] : lo[k]) - origin[k]) * inv[k];
    if (tk < t_exit) {
      t_exit = tk;
      face = k * 2 + (direction[k] > 0 ? 1 : 0);
    }
  }
  hit.distance = t_exit;
  hit.point = origin + t_exit * direction;
  const auto [s, u] = face_coords(hit.point, face / 2);
  const Vector3d base(0.45 + 0.1 * (face % 3), 0.5 + 0.08 * (face % 2), 0.55 - 0.06 * (face / 2));
  hit.color = surface_color(scene.background_seed * 6U + static_cast<uint32_t>(face), base, s, u,
                            2.5 * config.texture_scale);
  return hit;
}

RenderOutput rasterize(const SceneSpec& scene, const SceneConfig& config, const Camera& camera,
                       int t) {
  if (t < 1 || t > scene.frames) {
    throw ConfigError("frame " + std::to_string(t) + " outside [1, " +
                      std::to_string(scene.frames) + "]");
  }
  const auto& k = camera.intrinsics;
  const int W = k.width;
  const int H = k.height;
  const Eigen::Matrix3d Rt = camera.pose.R.transpose();
  const Vector3d origin = camera.pose.center();
  const int ss = config.supersample;

  RenderOutput out;
  std::vector<float> rgb(static_cast<size_t>(3 * H * W));
  out.depth.resize(static_cast<size_t>(H * W));
  out.dyn_mask.resize(static_cast<size_t>(H * W));
  auto ray = [&](double u, double v) -> Vector3d {
    return Rt * Vector3d((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
  };
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const size_t i = static_cast<size_t>(y * W + x);
      const SurfaceHit centre = trace_ray(scene, config, origin, ray(x, y), t);
      out.depth[i] = static_cast<float>(centre.distance);
      out.dyn_mask[i] = centre.dynamic ? 1 : 0;
      Vector3d color = Vector3d::Zero();
      if (ss == 1) {
        color = centre.color;
      } else {
        for (int a = 0; a < ss; ++a) {
          for (int b = 0; b < ss; ++b) {
            const double u = x - 0.5 + (b + 0.5) / ss;
            const double v = y - 0.5 + (a + 0.5) / ss;
            color += trace_ray(scene, config, origin, ray(u, v), t).color;
          }
        }
        color /= static_cast<double>(ss * ss);
      }
      for (int c = 0; c < 3; ++c) rgb[static_cast<size_t>(c * H * W) + i] = static_cast<float>(color[c]);
    }
  }
  out.frame = Tensor(Shape{3, H, W}, std::move(rgb));
  return out;
}

}  // namespace grvs
