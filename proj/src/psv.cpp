#include "grvs/psv.hpp"

#include "grvs/errors.hpp"
#include "grvs/ops.hpp"

namespace grvs {

template <typename T>
PlaneSweepVolumeT<T> build_dynamic_psv(std::span<const TensorT<T>> frames,
                                       std::span<const Camera> cameras, const Camera& target,
                                       const DepthSchedule& schedule) {
  if (frames.empty()) throw ShapeError("build_dynamic_psv: needs at least one view");
  if (frames.size() != cameras.size()) {
    throw ShapeError("build_dynamic_psv: " + std::to_string(frames.size()) + " frames but " +
                     std::to_string(cameras.size()) + " cameras");
  }
  const Shape& first = frames.front().shape();
  if (first.size() != 3 || first[0] != 3) {
    throw ShapeError("build_dynamic_psv: frames must be 3 x H x W, got " + to_string(first));
  }
  for (const auto& f : frames) {
    if (f.shape() != first) {
      throw ShapeError("build_dynamic_psv: mismatched frame sizes " + to_string(f.shape()) +
                       " vs " + to_string(first));
    }
  }
  std::vector<TensorT<T>> slices;
  slices.reserve(static_cast<size_t>(schedule.count()) * frames.size());
  for (double depth : schedule.depths) {
    for (size_t v = 0; v < frames.size(); ++v) {
      slices.push_back(bilinear_sample(frames[v], plane_warp_grid(cameras[v], target, depth)));
    }
  }
  TensorT<T> flat = stack(slices);
  Shape shape{schedule.count(), static_cast<int64_t>(frames.size()), 3, target.height(),
              target.width()};
  return {reshape(flat, std::move(shape)), schedule, target};
}

template PlaneSweepVolumeT<float> build_dynamic_psv(std::span<const TensorT<float>>,
                                                    std::span<const Camera>, const Camera&,
                                                    const DepthSchedule&);
template PlaneSweepVolumeT<double> build_dynamic_psv(std::span<const TensorT<double>>,
                                                     std::span<const Camera>, const Camera&,
                                                     const DepthSchedule&);

Tensor psv_view_mean(const PlaneSweepVolume& psv) {
  const Shape& s = psv.data.shape();
  const int64_t D = s[0], V = s[1], C = s[2], H = s[3], W = s[4];
  const int64_t slice = C * H * W;
  std::vector<float> out(static_cast<size_t>(D * slice), 0.0f);
  const float* src = psv.data.data().data();
  for (int64_t k = 0; k < D; ++k) {
    for (int64_t i = 0; i < slice; ++i) {
      double acc = 0.0;
      for (int64_t v = 0; v < V; ++v) acc += src[(k * V + v) * slice + i];
      out[static_cast<size_t>(k * slice + i)] = static_cast<float>(acc / static_cast<double>(V));
    }
  }
  return Tensor(Shape{D, C, H, W}, std::move(out));
}

std::vector<double> cross_view_variance(const PlaneSweepVolume& psv, int plane) {
  const Shape& s = psv.data.shape();
  const int64_t D = s[0], V = s[1], C = s[2], H = s[3], W = s[4];
  if (plane < 0 || plane >= D) {
    throw ShapeError("plane index " + std::to_string(plane) + " out of range for " +
                     std::to_string(D) + " planes");
  }
  const int64_t pixels = H * W;
  const float* base = psv.data.data().data() + plane * V * C * pixels;
  std::vector<double> var(static_cast<size_t>(pixels), 0.0);
  for (int64_t c = 0; c < C; ++c) {
    for (int64_t i = 0; i < pixels; ++i) {
      double mean = 0.0;
      for (int64_t v = 0; v < V; ++v) mean += base[(v * C + c) * pixels + i];
      mean /= static_cast<double>(V);
      double acc = 0.0;
      for (int64_t v = 0; v < V; ++v) {
        const double d = base[(v * C + c) * pixels + i] - mean;
        acc += d * d;
      }
      var[static_cast<size_t>(i)] += acc / static_cast<double>(V);
    }
  }
  for (double& x : var) x /= static_cast<double>(C);
  return var;
}

double focus_score(const PlaneSweepVolume& psv, int plane, const std::vector<uint8_t>* mask) {
  const std::vector<double> var = cross_view_variance(psv, plane);
  if (mask && mask->size() != var.size()) throw ShapeError("focus_score: mask size mismatch");
  double acc = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < var.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    acc += var[i];
    ++count;
  }
  if (count == 0) throw ShapeError("focus_score: empty mask");
  return acc / static_cast<double>(count);
}

}  // namespace grvs
