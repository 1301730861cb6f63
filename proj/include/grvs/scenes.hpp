#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <vector>

#include "json.hpp"

#include "grvs/geometry.hpp"
#include "grvs/tensor.hpp"

namespace grvs {

// World frame: z is up, the floor is the plane z = 0 and the room is the box
// [-room_half_extent, room_half_extent]^2 x [0, room_height]. Cameras sit on
// a hemisphere around `look_at`; spherical coordinates are (radius, azimuth
// theta around +z from +x, elevation phi above the horizontal plane).

struct SceneConfig {
  int width = 64;
  int height = 64;
  int frames = 81;
  int statics = 8;
  int dynamics = 2;
  double focal_factor = 1.0;  // fx = fy = focal_factor * width
  double room_half_extent = 7.0;
  double room_height = 6.0;
  double placement_radius = 2.6;  // objects stay within |x|, |y| <= this
  double min_object_size = 0.35;
  double max_object_size = 1.1;
  double min_speed = 0.01;  // world units per frame
  double max_speed = 0.03;
  double min_camera_radius = 4.2;
  double max_camera_radius = 5.0;
  double min_elevation = 0.30;  // radians
  double max_elevation = 0.65;
  double min_sweep = 0.55;  // azimuth travelled by the input camera, radians
  double max_sweep = 1.0;
  // Static targets sit above the trajectory midpoint, raised by these
  // elevation offsets (radians): target1 close to the input path, target2 further.
  std::array<double, 2> target_elevation_offsets{0.12, 0.30};
  int supersample = 2;  // colour samples per pixel along each axis
  // Texture lattice spacing on objects, world units; the room uses 2.5x.
  double texture_scale = 0.25;
  Eigen::Vector3d look_at{0.0, 0.0, 0.5};

  void validate() const;
  nlohmann::json to_json() const;
  static SceneConfig from_json(const nlohmann::json& j);
  CameraIntrinsics intrinsics() const;
};

/// Axis-aligned textured box. Dynamic boxes translate with constant
/// velocity: centre(t) = centre + velocity * (t - 1).
struct SceneObject {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_size = Eigen::Vector3d::Constant(0.5);
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d color = Eigen::Vector3d::Constant(0.5);
  uint32_t texture_seed = 0;
  bool dynamic = false;

  Eigen::Vector3d center_at(int t) const { return center + velocity * static_cast<double>(t - 1); }
};

struct SphericalCoords {
  double radius = 4.5;
  double azimuth = 0.0;
  double elevation = 0.4;
};

struct SceneSpec {
  uint64_t seed = 0;
  int frames = 81;
  uint32_t background_seed = 0;
  std::vector<SceneObject> objects;
  SphericalCoords trajectory_start;
  SphericalCoords trajectory_end;
  std::array<SphericalCoords, 2> targets;

  int static_count() const;
  int dynamic_count() const;
  nlohmann::json to_json() const;
  static SceneSpec from_json(const nlohmann::json& j);
};

/// Deterministic in (seed, config). Dynamic velocities are resampled until
/// the object stays inside the placement bounds through the last frame.
SceneSpec sample_scene(uint64_t seed, const SceneConfig& config);

/// Same scene with every velocity set to zero (objects frozen at t = 1).
SceneSpec freeze_dynamics(const SceneSpec& spec);
/// Same scene with the dynamic objects removed.
SceneSpec without_dynamics(const SceneSpec& spec);

/// `frames` cameras whose (radius, azimuth, elevation) are linearly
/// interpolated between the endpoints, all looking at `look_at`.
std::vector<Camera> camera_trajectory(const SphericalCoords& start, const SphericalCoords& end,
                                      int frames, const Eigen::Vector3d& look_at,
                                      const CameraIntrinsics& intrinsics);

Camera camera_at(const SphericalCoords& coords, const Eigen::Vector3d& look_at,
                 const CameraIntrinsics& intrinsics);

struct RenderOutput {
  Tensor frame;                   // 3 x H x W in [0, 1]
  std::vector<float> depth;       // H x W camera-space depth of the front surface
  std::vector<uint8_t> dyn_mask;  // H x W, 1 where the front surface is dynamic
};

struct SurfaceHit {
  double distance = 0.0;  // ray parameter; equals camera depth for rays with unit z in camera frame
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  bool dynamic = false;
};

/// Front-most surface along origin + s * direction (s > 0) at frame t. The
/// room is closed, so every ray from inside it hits something.
SurfaceHit trace_ray(const SceneSpec& scene, const SceneConfig& config,
                     const Eigen::Vector3d& origin, const Eigen::Vector3d& direction, int t);

/// Ray-cast z-buffer render of the room and all objects at frame t (1-based).
/// Depth and mask come from the pixel-centre ray; colour averages
/// config.supersample^2 rays per pixel.
RenderOutput rasterize(const SceneSpec& scene, const SceneConfig& config, const Camera& camera,
                       int t);

/// Cameras of the moving input sequence and the two static target sequences.
struct SceneCameras {
  std::vector<Camera> input;
  std::array<std::vector<Camera>, 2> targets;
};
SceneCameras scene_cameras(const SceneSpec& scene, const SceneConfig& config);

}  // namespace grvs
