#include <cmath>

#include "doctest.h"
#include "grvs/errors.hpp"
#include "grvs/ops.hpp"
#include "helpers.hpp"

using namespace grvs;
using grvs::test::random_tensor;

namespace {

// Direct seven-loop convolution, zero padding.
std::vector<double> conv3d_direct(const Tensor64& x, const Tensor64& w, const Tensor64& b,
                                  std::array<int, 3> s, std::array<int, 3> p, Shape& out_shape) {
  const auto N = x.dim(0), Ci = x.dim(1), D = x.dim(2), H = x.dim(3), W = x.dim(4);
  const auto Co = w.dim(0), kd = w.dim(2), kh = w.dim(3), kw = w.dim(4);
  const auto Do = (D + 2 * p[0] - kd) / s[0] + 1;
  const auto Ho = (H + 2 * p[1] - kh) / s[1] + 1;
  const auto Wo = (W + 2 * p[2] - kw) / s[2] + 1;
  out_shape = {N, Co, Do, Ho, Wo};
  std::vector<double> out(static_cast<size_t>(N * Co * Do * Ho * Wo));
  auto X = x.data();
  auto Wt = w.data();
  size_t i = 0;
  for (int64_t n = 0; n < N; ++n)
    for (int64_t co = 0; co < Co; ++co)
      for (int64_t od = 0; od < Do; ++od)
        for (int64_t oh = 0; oh < Ho; ++oh)
          for (int64_t ow = 0; ow < Wo; ++ow, ++i) {
            double acc = b.defined() ? b.data()[static_cast<size_t>(co)] : 0.0;
            for (int64_t ci = 0; ci < Ci; ++ci)
              for (int64_t a = 0; a < kd; ++a)
                for (int64_t c = 0; c < kh; ++c)
                  for (int64_t e = 0; e < kw; ++e) {
                    const int64_t zd = od * s[0] - p[0] + a;
                    const int64_t zh = oh * s[1] - p[1] + c;
                    const int64_t zw = ow * s[2] - p[2] + e;
                    if (zd < 0 || zd >= D || zh < 0 || zh >= H || zw < 0 || zw >= W) continue;
                    acc += X[static_cast<size_t>((((n * Ci + ci) * D + zd) * H + zh) * W + zw)] *
                           Wt[static_cast<size_t>((((co * Ci + ci) * kd + a) * kh + c) * kw + e)];
                  }
            out[i] = acc;
          }
  return out;
}

// Half-pixel bilinear 2x upsampling of one H x W plane, computed from source
// coordinate (i + 0.5) / 2 - 0.5 with edge clamping.
std::vector<double> upsample_direct(const std::vector<double>& x, int H, int W) {
  std::vector<double> out(static_cast<size_t>(4 * H * W));
  for (int i = 0; i < 2 * H; ++i) {
    for (int j = 0; j < 2 * W; ++j) {
      const double sy = std::clamp((i + 0.5) / 2.0 - 0.5, 0.0, H - 1.0);
      const double sx = std::clamp((j + 0.5) / 2.0 - 0.5, 0.0, W - 1.0);
      const int y0 = static_cast<int>(std::floor(sy));
      const int x0 = static_cast<int>(std::floor(sx));
      const int y1 = std::min(y0 + 1, H - 1);
      const int x1 = std::min(x0 + 1, W - 1);
      const double fy = sy - y0;
      const double fx = sx - x0;
      out[static_cast<size_t>(i * 2 * W + j)] =
          (1 - fy) * ((1 - fx) * x[static_cast<size_t>(y0 * W + x0)] + fx * x[static_cast<size_t>(y0 * W + x1)]) +
          fy * ((1 - fx) * x[static_cast<size_t>(y1 * W + x0)] + fx * x[static_cast<size_t>(y1 * W + x1)]);
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("tensor_ops") {
  TEST_CASE("tensor construction validates the element count") {
    CHECK_THROWS_AS(Tensor(Shape{2, 3}, std::vector<float>(5)), ShapeError);
    Tensor t = Tensor::full({2, 3}, 1.5f);
    CHECK(t.numel() == 6);
    CHECK(t.dim(-1) == 3);
    CHECK_THROWS_AS(t.dim(2), ShapeError);
    CHECK_THROWS_AS(t.item(), ShapeError);
  }

  TEST_CASE("backward accumulates through shared subexpressions") {
    Tensor64 x = Tensor64::full({3}, 2.0, true);
    Tensor64 y = sum(add(x, scale(x, 3.0)));  // d/dx = 4
    y.backward();
    for (double g : x.grad()) CHECK(g == 4.0);
    y.backward();  // leaves accumulate across calls
    for (double g : x.grad()) CHECK(g == 8.0);
  }

  TEST_CASE("detach cuts the graph") {
    Tensor64 x = Tensor64::full({2}, 1.0, true);
    Tensor64 y = sum(add(scale(x, 2.0), scale(x, 5.0).detach()));
    y.backward();
    for (double g : x.grad()) CHECK(g == 2.0);
  }

  TEST_CASE("no graph is recorded without grad-requiring inputs") {
    Tensor a = random_tensor({4}, 1);
    Tensor b = add(a, a);
    CHECK_FALSE(b.requires_grad());
    CHECK(b.node()->parents.empty());
  }

  TEST_CASE("conv3d matches the direct oracle") {
    for (auto [s, p] : {std::pair{std::array{1, 1, 1}, std::array{1, 1, 1}},
                        std::pair{std::array{2, 1, 1}, std::array{1, 1, 1}},
                        std::pair{std::array{1, 2, 2}, std::array{0, 1, 0}}}) {
      Tensor64 x = random_tensor<double>({2, 3, 5, 6, 7}, 3);
      Tensor64 w = random_tensor<double>({4, 3, 3, 3, 3}, 4);
      Tensor64 b = random_tensor<double>({4}, 5);
      Shape shape;
      const auto want = conv3d_direct(x, w, b, s, p, shape);
      Tensor64 got = conv3d(x, w, b, Conv3dOptions{s, p});
      REQUIRE(got.shape() == shape);
      for (size_t i = 0; i < want.size(); ++i) CHECK(got.data()[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("conv3d without bias and the 1x1x1 fast path") {
    Tensor64 x = random_tensor<double>({1, 5, 2, 3, 4}, 6);
    Tensor64 w = random_tensor<double>({3, 5, 1, 1, 1}, 7);
    Shape shape;
    const auto want = conv3d_direct(x, w, Tensor64(), {1, 1, 1}, {0, 0, 0}, shape);
    Tensor64 got = conv3d(x, w, Tensor64(), Conv3dOptions{});
    for (size_t i = 0; i < want.size(); ++i) CHECK(got.data()[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }

  TEST_CASE("conv2d is conv3d with a unit depth axis") {
    Tensor64 x = random_tensor<double>({2, 3, 6, 6}, 8);
    Tensor64 w = random_tensor<double>({4, 3, 2, 2}, 9);
    Tensor64 b = random_tensor<double>({4}, 10);
    Tensor64 got = conv2d(x, w, b, 2, 0);
    CHECK(got.shape() == Shape{2, 4, 3, 3});
    Shape shape;
    const auto want = conv3d_direct(reshape(x, {2, 3, 1, 6, 6}), reshape(w, {4, 3, 1, 2, 2}), b,
                                    {1, 2, 2}, {0, 0, 0}, shape);
    for (size_t i = 0; i < want.size(); ++i) CHECK(got.data()[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }

  TEST_CASE("conv shape errors") {
    Tensor x = random_tensor({1, 3, 4, 4, 4}, 1);
    CHECK_THROWS_AS(conv3d(x, random_tensor({2, 2, 3, 3, 3}, 2), Tensor(), {}), ShapeError);
    CHECK_THROWS_AS(conv3d(x, random_tensor({2, 3, 5, 3, 3}, 2), Tensor(), {}), ShapeError);
  }

  TEST_CASE("MAC counter reports the convolution formula") {
    Tensor x = random_tensor({1, 4, 4, 8, 8}, 1);
    Tensor w = random_tensor({6, 4, 3, 3, 3}, 2);
    ScopedMacCounter counter;
    conv3d(x, w, Tensor(), Conv3dOptions{{1, 1, 1}, {1, 1, 1}});
    CHECK(counter.macs() == 6 * 4 * 27 * 4 * 8 * 8);
    CHECK(conv3d_macs(x.shape(), w.shape(), Conv3dOptions{{1, 1, 1}, {1, 1, 1}}) == counter.macs());
  }

  TEST_CASE("leaky relu and relu") {
    Tensor x(Shape{4}, {-2.0f, -0.5f, 0.0f, 3.0f});
    auto y = leaky_relu(x, 0.2f);
    CHECK(y.data()[0] == doctest::Approx(-0.4));
    CHECK(y.data()[2] == 0.0f);
    CHECK(y.data()[3] == 3.0f);
    auto r = relu(x);
    CHECK(r.data()[0] == 0.0f);
    CHECK(r.data()[3] == 3.0f);
  }

  TEST_CASE("concat, permute, reshape and crop move elements as indexed") {
    Tensor a = random_tensor({2, 3, 4}, 1);
    Tensor b = random_tensor({2, 1, 4}, 2);
    Tensor c = concat<float>({a, b}, 1);
    CHECK(c.shape() == Shape{2, 4, 4});
    CHECK(c.data()[static_cast<size_t>((1 * 4 + 3) * 4 + 2)] == b.data()[static_cast<size_t>(1 * 4 + 2)]);
    Tensor p = permute(a, {2, 0, 1});
    CHECK(p.shape() == Shape{4, 2, 3});
    CHECK(p.data()[static_cast<size_t>((3 * 2 + 1) * 3 + 2)] == a.data()[static_cast<size_t>((1 * 3 + 2) * 4 + 3)]);
    CHECK_THROWS_AS(reshape(a, {5, 5}), ShapeError);
    Tensor img = random_tensor({3, 8, 9}, 3);
    Tensor cr = crop2d(img, 2, 3, 4, 5);
    CHECK(cr.data()[static_cast<size_t>((2 * 4 + 1) * 5 + 4)] == img.data()[static_cast<size_t>((2 * 8 + 3) * 9 + 7)]);
    CHECK_THROWS_AS(crop2d(img, 6, 0, 4, 4), ShapeError);
    Tensor s = stack<float>({a, a});
    CHECK(s.shape() == Shape{2, 2, 3, 4});
  }

  TEST_CASE("avgpool gives block means") {
    Tensor x = random_tensor({2, 4, 6}, 5);
    Tensor y = avgpool_2x(x);
    REQUIRE(y.shape() == Shape{2, 2, 3});
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) {
          auto at = [&](int r, int q) { return x.data()[static_cast<size_t>((c * 4 + r) * 6 + q)]; };
          const double m = (at(2 * i, 2 * j) + at(2 * i + 1, 2 * j) + at(2 * i, 2 * j + 1) +
                            at(2 * i + 1, 2 * j + 1)) / 4.0;
          CHECK(y.data()[static_cast<size_t>((c * 2 + i) * 3 + j)] == doctest::Approx(m).epsilon(1e-6));
        }
    CHECK_THROWS_AS(avgpool_2x(random_tensor({1, 3, 4}, 1)), ShapeError);
  }

  TEST_CASE("bilinear 2x upsampling matches the half-pixel oracle") {
    Tensor64 x = random_tensor<double>({2, 3, 5}, 6);
    Tensor64 y = resize_bilinear_2x(x);
    REQUIRE(y.shape() == Shape{2, 6, 10});
    for (int c = 0; c < 2; ++c) {
      std::vector<double> plane(x.data().begin() + c * 15, x.data().begin() + (c + 1) * 15);
      const auto want = upsample_direct(plane, 3, 5);
      for (size_t i = 0; i < want.size(); ++i) CHECK(y.data()[static_cast<size_t>(c * 60) + i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("pooling then upsampling equals the upsampled block means") {
    // Bilinear upsampling interpolates between neighbouring block means, so
    // only a constant block pattern survives unchanged.
    Tensor64 x = random_tensor<double>({1, 4, 4}, 7);
    Tensor64 pooled = avgpool_2x(x);
    std::vector<double> means(pooled.data().begin(), pooled.data().end());
    const auto want = upsample_direct(means, 2, 2);
    Tensor64 y = resize_bilinear_2x(pooled);
    for (size_t i = 0; i < want.size(); ++i) CHECK(y.data()[i] == doctest::Approx(want[i]).epsilon(1e-12));
    Tensor64 flat = Tensor64::full({1, 4, 4}, 0.25);
    const Tensor64 back = resize_bilinear_2x(avgpool_2x(flat));
    for (double v : back.data()) CHECK(v == 0.25);
  }

  TEST_CASE("pixel shuffle places channel c*F*F + r*F + s at offset (r, s)") {
    const int F = 3;
    Tensor x = random_tensor({1, 2 * F * F, 2, 2}, 8);
    Tensor y = pixel_shuffle(x, F);
    REQUIRE(y.shape() == Shape{1, 2, 6, 6});
    for (int c = 0; c < 2; ++c)
      for (int r = 0; r < F; ++r)
        for (int s = 0; s < F; ++s)
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
              CHECK(y.data()[static_cast<size_t>((c * 6 + i * F + r) * 6 + j * F + s)] ==
                    x.data()[static_cast<size_t>(((c * F * F + r * F + s) * 2 + i) * 2 + j)]);
  }

  TEST_CASE("l1 loss value and gradient") {
    Tensor64 p(Shape{4}, {0.0, 1.0, 2.0, 3.0}, true);
    Tensor64 t(Shape{4}, {1.0, 1.0, 0.0, 5.0});
    Tensor64 l = l1_loss(p, t);
    CHECK(l.item() == doctest::Approx((1.0 + 0.0 + 2.0 + 2.0) / 4.0));
    l.backward();
    CHECK(p.grad()[0] == -0.25);
    CHECK(p.grad()[1] == 0.0);
    CHECK(p.grad()[2] == 0.25);
  }
}
