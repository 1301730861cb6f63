#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <random>
#include <vector>

#include "grvs/geometry.hpp"
#include "grvs/tensor.hpp"

namespace grvs::test {

template <typename T = float>
TensorT<T> random_tensor(Shape shape, uint64_t seed, double lo = -1.0, double hi = 1.0,
                         bool requires_grad = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<T> v(static_cast<size_t>(numel(shape)));
  for (auto& x : v) x = static_cast<T>(dist(rng));
  return TensorT<T>(std::move(shape), std::move(v), requires_grad);
}

inline Camera make_camera(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, int w, int h,
                          double f) {
  Camera c;
  c.intrinsics = {f, f, (w - 1) / 2.0, (h - 1) / 2.0, w, h};
  c.pose = look_at(eye, target, Eigen::Vector3d::UnitZ());
  return c;
}

/// Random camera on a shell around the origin looking roughly at it.
inline Camera random_camera(std::mt19937_64& rng, int w = 32, int h = 24) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Eigen::Vector3d eye(3.0 * u(rng), 3.0 * u(rng), 2.0 + u(rng));
  const Eigen::Vector3d at(0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng));
  Camera c;
  c.intrinsics = {w * (0.8 + 0.4 * (u(rng) + 1)), w * (0.8 + 0.4 * (u(rng) + 1)),
                  (w - 1) / 2.0 + u(rng), (h - 1) / 2.0 + u(rng), w, h};
  c.pose = look_at(eye, at, Eigen::Vector3d::UnitZ());
  return c;
}

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("grvs_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace grvs::test
