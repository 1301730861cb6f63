#include "grvs/geometry.hpp"

#include <Eigen/LU>
#include <Eigen/Geometry>
#include <cmath>

#include "grvs/errors.hpp"

namespace grvs {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw GeometryError("focal lengths must be positive");
  if (width < 1 || height < 1) throw GeometryError("image size must be at least 1x1");
}

CameraIntrinsics CameraIntrinsics::downscaled(int factor) const {
  if (factor < 1 || width % factor != 0 || height % factor != 0) {
    throw GeometryError("image size " + std::to_string(width) + "x" + std::to_string(height) +
                        " is not divisible by " + std::to_string(factor));
  }
  const double f = factor;
  CameraIntrinsics k = *this;
  k.fx = fx / f;
  k.fy = fy / f;
  k.cx = (cx + 0.5) / f - 0.5;
  k.cy = (cy + 0.5) / f - 0.5;
  k.width = width / factor;
  k.height = height / factor;
  return k;
}

CameraIntrinsics CameraIntrinsics::cropped(int top, int left, int h, int w) const {
  if (top < 0 || left < 0 || h < 1 || w < 1 || top + h > height || left + w > width) {
    throw GeometryError("crop window outside the image");
  }
  CameraIntrinsics k = *this;
  k.cx = cx - left;
  k.cy = cy - top;
  k.width = w;
  k.height = h;
  return k;
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d K;
  K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return K;
}

void CameraPose::validate() const {
  const double ortho = (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= 1e-6)) throw GeometryError("rotation is not orthonormal");
  if (!(std::abs(R.determinant() - 1.0) <= 1e-6)) {
    throw GeometryError("rotation determinant is not 1");
  }
  if (!t.allFinite()) throw GeometryError("translation is not finite");
}

bool operator==(const CameraIntrinsics& a, const CameraIntrinsics& b) {
  return a.fx == b.fx && a.fy == b.fy && a.cx == b.cx && a.cy == b.cy && a.width == b.width &&
         a.height == b.height;
}

bool operator==(const CameraPose& a, const CameraPose& b) { return a.R == b.R && a.t == b.t; }

bool operator==(const Camera& a, const Camera& b) {
  return a.intrinsics == b.intrinsics && a.pose == b.pose;
}

nlohmann::json camera_to_json(const Camera& camera) {
  const auto& k = camera.intrinsics;
  const auto& p = camera.pose;
  std::vector<double> R;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) R.push_back(p.R(r, c));
  return {{"fx", k.fx}, {"fy", k.fy},   {"cx", k.cx},
          {"cy", k.cy}, {"width", k.width}, {"height", k.height},
          {"R", R},     {"t", std::vector<double>{p.t.x(), p.t.y(), p.t.z()}}};
}

Camera camera_from_json(const nlohmann::json& j) {
  Camera cam;
  try {
    cam.intrinsics.fx = j.at("fx").get<double>();
    cam.intrinsics.fy = j.at("fy").get<double>();
    cam.intrinsics.cx = j.at("cx").get<double>();
    cam.intrinsics.cy = j.at("cy").get<double>();
    cam.intrinsics.width = j.at("width").get<int>();
    cam.intrinsics.height = j.at("height").get<int>();
    const auto R = j.at("R").get<std::vector<double>>();
    const auto t = j.at("t").get<std::vector<double>>();
    if (R.size() != 9 || t.size() != 3) throw GeometryError("camera R needs 9 values and t 3");
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) cam.pose.R(r, c) = R[static_cast<size_t>(3 * r + c)];
    cam.pose.t = Eigen::Vector3d(t[0], t[1], t[2]);
  } catch (const nlohmann::json::exception& e) {
    throw GeometryError(std::string("malformed camera JSON: ") + e.what());
  }
  cam.validate();
  return cam;
}

CameraPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                   const Eigen::Vector3d& up) {
  const Eigen::Vector3d forward = target - eye;
  if (forward.norm() < 1e-12) throw GeometryError("look-at target coincides with the camera");
  const Eigen::Vector3d z = forward.normalized();
  Eigen::Vector3d x = z.cross(up);
  if (x.norm() < 1e-9) {
    const Eigen::Vector3d alt =
        std::abs(z.y()) < 0.9 ? Eigen::Vector3d::UnitY() : Eigen::Vector3d::UnitX();
    x = z.cross(alt);
  }
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  CameraPose pose;
  pose.R.row(0) = x.transpose();
  pose.R.row(1) = y.transpose();
  pose.R.row(2) = z.transpose();
  pose.t = -pose.R * eye;
  return pose;
}

Projection project(const Camera& camera, const Eigen::Vector3d& point) {
  const Eigen::Vector3d p = camera.pose.R * point + camera.pose.t;
  if (std::abs(p.z()) < 1e-12) throw GeometryError("point projects with degenerate depth");
  const auto& k = camera.intrinsics;
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy, p.z()};
}

Eigen::Vector3d backproject(const Camera& camera, double u, double v, double z) {
  if (!(z > 0.0)) throw GeometryError("backprojection depth must be positive");
  const auto& k = camera.intrinsics;
  const Eigen::Vector3d p((u - k.cx) / k.fx * z, (v - k.cy) / k.fy * z, z);
  return camera.pose.R.transpose() * (p - camera.pose.t);
}

SamplingGrid SamplingGrid::identity(int height, int width) {
  SamplingGrid g;
  g.height = height;
  g.width = width;
  const size_t n = static_cast<size_t>(height) * static_cast<size_t>(width);
  g.u.resize(n);
  g.v.resize(n);
  g.in_front.assign(n, 1);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      g.u[static_cast<size_t>(y * width + x)] = x;
      g.v[static_cast<size_t>(y * width + x)] = y;
    }
  }
  return g;
}

SamplingGrid plane_warp_grid(const Camera& src, const Camera& tgt, double depth) {
  if (!(depth > 0.0)) throw GeometryError("plane depth must be positive");
  // Source-camera point for target pixel (u, v):
  //   p = depth * A * [u, v, 1]^T + b
  // with A = R_s R_t^T K_t^-1 and b = t_s - R_s R_t^T t_t.
  const Eigen::Matrix3d rel = src.pose.R * tgt.pose.R.transpose();
  const Eigen::Matrix3d A = rel * tgt.intrinsics.matrix().inverse();
  const Eigen::Vector3d b = src.pose.t - rel * tgt.pose.t;
  const auto& ks = src.intrinsics;

  SamplingGrid g;
  g.height = tgt.intrinsics.height;
  g.width = tgt.intrinsics.width;
  const size_t n = static_cast<size_t>(g.height) * static_cast<size_t>(g.width);
  g.u.resize(n);
  g.v.resize(n);
  g.in_front.resize(n);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      const Eigen::Vector3d p = depth * (A * Eigen::Vector3d(x, y, 1.0)) + b;
      const size_t i = static_cast<size_t>(y * g.width + x);
      g.in_front[i] = p.z() > 1e-12 ? 1 : 0;
      const double z = std::abs(p.z()) < 1e-12 ? 1e-12 : p.z();
      g.u[i] = ks.fx * p.x() / z + ks.cx;
      g.v[i] = ks.fy * p.y() / z + ks.cy;
    }
  }
  return g;
}

namespace {

struct Taps {
  int64_t index[4];
  double weight[4];
};

}  // namespace

template <typename T>
TensorT<T> bilinear_sample(const TensorT<T>& image, const SamplingGrid& grid) {
  if (image.rank() < 2) throw ShapeError("bilinear_sample: image rank must be >= 2");
  const int64_t H = image.dim(-2);
  const int64_t W = image.dim(-1);
  const int64_t planes = image.numel() / (H * W);
  const int64_t out_pixels = static_cast<int64_t>(grid.height) * grid.width;

  std::vector<Taps> taps(static_cast<size_t>(out_pixels));
  for (int64_t i = 0; i < out_pixels; ++i) {
    Taps& t = taps[static_cast<size_t>(i)];
    const double x = grid.u[static_cast<size_t>(i)];
    const double y = grid.v[static_cast<size_t>(i)];
    // Per-tap zero padding: taps outside the image contribute nothing.
    const bool near = grid.in_front[static_cast<size_t>(i)] && x > -1.0 &&
                      x < static_cast<double>(W) && y > -1.0 && y < static_cast<double>(H);
    t = {{0, 0, 0, 0}, {0.0, 0.0, 0.0, 0.0}};
    if (!near) continue;
    const int64_t x0 = static_cast<int64_t>(std::floor(x));
    const int64_t y0 = static_cast<int64_t>(std::floor(y));
    const double fx = x - static_cast<double>(x0);
    const double fy = y - static_cast<double>(y0);
    const int64_t xs[4] = {x0, x0 + 1, x0, x0 + 1};
    const int64_t ys[4] = {y0, y0, y0 + 1, y0 + 1};
    const double ws[4] = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy};
    for (int k = 0; k < 4; ++k) {
      if (xs[k] < 0 || xs[k] >= W || ys[k] < 0 || ys[k] >= H) continue;
      t.index[k] = ys[k] * W + xs[k];
      t.weight[k] = ws[k];
    }
  }

  Shape out_shape = image.shape();
  out_shape[out_shape.size() - 2] = grid.height;
  out_shape[out_shape.size() - 1] = grid.width;
  std::vector<T> out(static_cast<size_t>(planes * out_pixels));
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = image.data().data() + p * H * W;
    T* dst = out.data() + p * out_pixels;
    for (int64_t i = 0; i < out_pixels; ++i) {
      const Taps& t = taps[static_cast<size_t>(i)];
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.weight[k] * static_cast<double>(src[t.index[k]]);
      dst[i] = static_cast<T>(acc);
    }
  }
  return TensorT<T>::make_result(
      std::move(out_shape), std::move(out), {image},
      [taps = std::move(taps), planes, out_pixels, H, W](const detail::Node<T>& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (int64_t p = 0; p < planes; ++p) {
          T* dst = g.data() + p * H * W;
          const T* go = self.grad.data() + p * out_pixels;
          for (int64_t i = 0; i < out_pixels; ++i) {
            const Taps& t = taps[static_cast<size_t>(i)];
            for (int k = 0; k < 4; ++k) {
              dst[t.index[k]] += static_cast<T>(t.weight[k] * static_cast<double>(go[i]));
            }
          }
        }
      });
}

template TensorT<float> bilinear_sample(const TensorT<float>&, const SamplingGrid&);
template TensorT<double> bilinear_sample(const TensorT<double>&, const SamplingGrid&);

DepthSchedule make_depth_schedule(double near, double far, int count) {
  if (!(near > 0.0) || !(far > near)) {
    throw GeometryError("depth range needs 0 < near < far");
  }
  if (count < 2) throw GeometryError("depth schedule needs at least 2 planes");
  DepthSchedule s;
  s.near = near;
  s.far = far;
  s.depths.resize(static_cast<size_t>(count));
  const double inv_near = 1.0 / near;
  const double inv_far = 1.0 / far;
  for (int k = 0; k < count; ++k) {
    const double a = static_cast<double>(k) / static_cast<double>(count - 1);
    s.depths[static_cast<size_t>(k)] = 1.0 / (inv_near + a * (inv_far - inv_near));
  }
  s.depths.front() = near;
  s.depths.back() = far;
  return s;
}

}  // namespace grvs
