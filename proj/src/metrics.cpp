#include "grvs/metrics.hpp"

#include <array>
#include <cmath>

#include "grvs/errors.hpp"

namespace grvs {

namespace {

constexpr int kWindow = 11;
constexpr int kRadius = kWindow / 2;

template <typename T>
void check_pair(const TensorT<T>& a, const TensorT<T>& b, const std::vector<uint8_t>* mask) {
  if (a.shape() != b.shape()) {
    throw ShapeError("metric inputs differ in shape: " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
  if (a.rank() != 3) throw ShapeError("metrics expect C x H x W images");
  if (mask != nullptr && static_cast<int64_t>(mask->size()) != a.dim(1) * a.dim(2)) {
    throw ShapeError("mask does not match the image size");
  }
}

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> g{};
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kRadius;
    g[static_cast<size_t>(i)] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
    total += g[static_cast<size_t>(i)];
  }
  for (double& v : g) v /= total;
  return g;
}

// Valid-mode separable Gaussian filter of one H x W plane.
std::vector<double> filter(const std::vector<double>& x, int H, int W,
                           const std::array<double, kWindow>& g) {
  const int oh = H - kWindow + 1;
  const int ow = W - kWindow + 1;
  std::vector<double> rows(static_cast<size_t>(H * ow));
  for (int y = 0; y < H; ++y) {
    for (int j = 0; j < ow; ++j) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[static_cast<size_t>(k)] * x[static_cast<size_t>(y * W + j + k)];
      rows[static_cast<size_t>(y * ow + j)] = s;
    }
  }
  std::vector<double> out(static_cast<size_t>(oh * ow));
  for (int i = 0; i < oh; ++i) {
    for (int j = 0; j < ow; ++j) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[static_cast<size_t>(k)] * rows[static_cast<size_t>((i + k) * ow + j)];
      out[static_cast<size_t>(i * ow + j)] = s;
    }
  }
  return out;
}

template <typename T>
double psnr_impl(const TensorT<T>& a, const TensorT<T>& b, const std::vector<uint8_t>* mask) {
  check_pair(a, b, mask);
  const int64_t C = a.dim(0);
  const int64_t hw = a.dim(1) * a.dim(2);
  auto pa = a.data();
  auto pb = b.data();
  double se = 0.0;
  int64_t count = 0;
  for (int64_t i = 0; i < hw; ++i) {
    if (mask != nullptr && (*mask)[static_cast<size_t>(i)] == 0) continue;
    for (int64_t c = 0; c < C; ++c) {
      const double d = static_cast<double>(pa[static_cast<size_t>(c * hw + i)]) - pb[static_cast<size_t>(c * hw + i)];
      se += d * d;
    }
    count += C;
  }
  if (count == 0) throw ShapeError("psnr over an empty mask");
  const double mse = se / static_cast<double>(count);
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

template <typename T>
double ssim_impl(const TensorT<T>& a, const TensorT<T>& b, const std::vector<uint8_t>* mask) {
  check_pair(a, b, mask);
  const int C = static_cast<int>(a.dim(0));
  const int H = static_cast<int>(a.dim(1));
  const int W = static_cast<int>(a.dim(2));
  if (H < kWindow || W < kWindow) {
    throw ShapeError("ssim needs images of at least 11 x 11, got " + to_string(a.shape()));
  }
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const auto g = gaussian_taps();
  const int oh = H - kWindow + 1;
  const int ow = W - kWindow + 1;
  const size_t hw = static_cast<size_t>(H * W);

  int64_t windows = 0;
  for (int i = 0; i < oh; ++i) {
    for (int j = 0; j < ow; ++j) {
      if (mask == nullptr || (*mask)[static_cast<size_t>((i + kRadius) * W + j + kRadius)]) ++windows;
    }
  }
  if (windows == 0) throw ShapeError("ssim mask selects no window centre");

  double total = 0.0;
  for (int c = 0; c < C; ++c) {
    std::vector<double> x(hw), y(hw), xx(hw), yy(hw), xy(hw);
    for (size_t i = 0; i < hw; ++i) {
      x[i] = a.data()[static_cast<size_t>(c) * hw + i];
      y[i] = b.data()[static_cast<size_t>(c) * hw + i];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter(x, H, W, g);
    const auto my = filter(y, H, W, g);
    const auto sxx = filter(xx, H, W, g);
    const auto syy = filter(yy, H, W, g);
    const auto sxy = filter(xy, H, W, g);
    double channel = 0.0;
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) {
        if (mask != nullptr && !(*mask)[static_cast<size_t>((i + kRadius) * W + j + kRadius)]) continue;
        const size_t k = static_cast<size_t>(i * ow + j);
        const double vx = sxx[k] - mx[k] * mx[k];
        const double vy = syy[k] - my[k] * my[k];
        const double cov = sxy[k] - mx[k] * my[k];
        const double num = (2 * mx[k] * my[k] + c1) * (2 * cov + c2);
        const double den = (mx[k] * mx[k] + my[k] * my[k] + c1) * (vx + vy + c2);
        channel += num / den;
      }
    }
    total += channel / static_cast<double>(windows);
  }
  return total / C;
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b, const std::vector<uint8_t>* mask) {
  return psnr_impl(a, b, mask);
}
double psnr(const Tensor64& a, const Tensor64& b, const std::vector<uint8_t>* mask) {
  return psnr_impl(a, b, mask);
}
double ssim(const Tensor& a, const Tensor& b, const std::vector<uint8_t>* mask) {
  return ssim_impl(a, b, mask);
}
double ssim(const Tensor64& a, const Tensor64& b, const std::vector<uint8_t>* mask) {
  return ssim_impl(a, b, mask);
}

}  // namespace grvs
