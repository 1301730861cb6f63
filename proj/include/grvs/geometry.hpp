#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "json.hpp"

#include "grvs/tensor.hpp"

namespace grvs {

// Conventions: pinhole cameras with world-to-camera extrinsics
// p_cam = R * p_world + t. The camera looks down +z, x points right and y
// points down in the image. Pixel (u, v) addresses column u, row v with
// integer values at pixel centres.

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  void validate() const;
  /// Intrinsics of the same camera sampled on a grid `factor` times coarser.
  CameraIntrinsics downscaled(int factor) const;
  /// Intrinsics of the window [top, top + h) x [left, left + w).
  CameraIntrinsics cropped(int top, int left, int h, int w) const;
  Eigen::Matrix3d matrix() const;
};

struct CameraPose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  void validate() const;
  /// Camera centre in world coordinates.
  Eigen::Vector3d center() const { return -R.transpose() * t; }
};

struct Camera {
  CameraIntrinsics intrinsics;
  CameraPose pose;

  void validate() const {
    intrinsics.validate();
    pose.validate();
  }
  int width() const { return intrinsics.width; }
  int height() const { return intrinsics.height; }
};

bool operator==(const CameraIntrinsics& a, const CameraIntrinsics& b);
bool operator==(const CameraPose& a, const CameraPose& b);
bool operator==(const Camera& a, const Camera& b);

/// {fx, fy, cx, cy, width, height, R: 9 row-major floats, t: 3 floats}.
nlohmann::json camera_to_json(const Camera& camera);
Camera camera_from_json(const nlohmann::json& j);

/// Pose looking from `eye` towards `target`. `up` is the world up direction;
/// when the view direction is parallel to it another axis is substituted.
CameraPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                   const Eigen::Vector3d& up);

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;  // camera-space depth; may be negative
};

Projection project(const Camera& camera, const Eigen::Vector3d& point);
Eigen::Vector3d backproject(const Camera& camera, double u, double v, double z);

/// Per-target-pixel continuous source coordinates, row-major over the target
/// image. `in_front` is false where the source depth is not positive.
struct SamplingGrid {
  int height = 0;
  int width = 0;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<uint8_t> in_front;

  static SamplingGrid identity(int height, int width);
};

/// Source pixel seen at each target pixel through the fronto-parallel plane
/// at `depth` in the target camera frame.
SamplingGrid plane_warp_grid(const Camera& src, const Camera& tgt, double depth);

/// Bilinear resampling of the last two axes of `image` at `grid`; taps
/// outside [0, W-1] x [0, H-1] or behind the source camera read as zero.
/// Differentiable with respect to the image values.
template <typename T>
TensorT<T> bilinear_sample(const TensorT<T>& image, const SamplingGrid& grid);

struct DepthSchedule {
  double near = 1.0;
  double far = 2.0;
  std::vector<double> depths;

  int count() const { return static_cast<int>(depths.size()); }
};

/// `count` planes spaced uniformly in inverse depth from near to far.
DepthSchedule make_depth_schedule(double near, double far, int count);

}  // namespace grvs
