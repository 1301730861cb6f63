#include "oracles.hpp"

#include <cmath>
#include <random>

#include "grvs/errors.hpp"
#include "grvs/model.hpp"
#include "grvs/ops.hpp"
#include "grvs/psv.hpp"

namespace grvs::oracle {

namespace {

Tensor64 random64(Shape shape, uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(static_cast<size_t>(numel(shape)));
  for (double& x : v) x = d(rng);
  return Tensor64(std::move(shape), std::move(v), true);
}

// Values in [lo, hi] with |x| >= 0.1 so that finite differences never cross
// the kink of a piecewise-linear function.
Tensor64 away_from_zero(Shape shape, uint64_t seed) {
  Tensor64 t = random64(std::move(shape), seed);
  for (double& x : t.mutable_data()) x = x < 0 ? x - 0.1 : x + 0.1;
  return t;
}

Camera cam(const Eigen::Vector3d& eye, int w, int h, double f) {
  Camera c;
  c.intrinsics = {f, f, (w - 1) / 2.0, (h - 1) / 2.0, w, h};
  c.pose = look_at(eye, Eigen::Vector3d(0, 0, 0), Eigen::Vector3d::UnitZ());
  return c;
}

}  // namespace

void warp_pixel(const Camera& src, const Camera& tgt, double depth, double u, double v,
                double& su, double& sv, double& sz) {
  const auto& kt = tgt.intrinsics;
  const double xc = depth * (u - kt.cx) / kt.fx;
  const double yc = depth * (v - kt.cy) / kt.fy;
  const double zc = depth;
  // world = R^T (p_cam - t)
  const auto& Rt = tgt.pose.R;
  const auto& tt = tgt.pose.t;
  double pw[3];
  for (int i = 0; i < 3; ++i) {
    pw[i] = Rt(0, i) * (xc - tt[0]) + Rt(1, i) * (yc - tt[1]) + Rt(2, i) * (zc - tt[2]);
  }
  double ps[3];
  for (int i = 0; i < 3; ++i) {
    ps[i] = src.pose.R(i, 0) * pw[0] + src.pose.R(i, 1) * pw[1] + src.pose.R(i, 2) * pw[2] + src.pose.t[i];
  }
  sz = ps[2];
  su = src.intrinsics.fx * ps[0] / ps[2] + src.intrinsics.cx;
  sv = src.intrinsics.fy * ps[1] / ps[2] + src.intrinsics.cy;
}

double psnr_direct(const Tensor& a, const Tensor& b, const std::vector<uint8_t>* mask) {
  const int64_t C = a.dim(0), H = a.dim(1), W = a.dim(2);
  double se = 0.0;
  double n = 0.0;
  for (int64_t c = 0; c < C; ++c)
    for (int64_t y = 0; y < H; ++y)
      for (int64_t x = 0; x < W; ++x) {
        if (mask && !(*mask)[static_cast<size_t>(y * W + x)]) continue;
        const double d = a.data()[static_cast<size_t>((c * H + y) * W + x)] -
                         static_cast<double>(b.data()[static_cast<size_t>((c * H + y) * W + x)]);
        se += d * d;
        n += 1.0;
      }
  if (n == 0.0) throw ShapeError("empty mask");
  const double mse = se / n;
  return mse == 0.0 ? 99.0 : std::min(99.0, -10.0 * std::log10(mse));
}

double ssim_direct(const Tensor& a, const Tensor& b, const std::vector<uint8_t>* mask) {
  const int64_t C = a.dim(0), H = a.dim(1), W = a.dim(2);
  double w2[11][11];
  double total = 0.0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      w2[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2.0 * 1.5 * 1.5));
      total += w2[i][j];
    }
  for (auto& row : w2)
    for (double& v : row) v /= total;
  const double c1 = 1e-4, c2 = 9e-4;
  double score = 0.0;
  for (int64_t c = 0; c < C; ++c) {
    double acc = 0.0;
    int64_t count = 0;
    auto A = [&](int64_t y, int64_t x) { return static_cast<double>(a.data()[static_cast<size_t>((c * H + y) * W + x)]); };
    auto B = [&](int64_t y, int64_t x) { return static_cast<double>(b.data()[static_cast<size_t>((c * H + y) * W + x)]); };
    for (int64_t y = 0; y + 11 <= H; ++y)
      for (int64_t x = 0; x + 11 <= W; ++x) {
        if (mask && !(*mask)[static_cast<size_t>((y + 5) * W + x + 5)]) continue;
        double ma = 0, mb = 0;
        for (int i = 0; i < 11; ++i)
          for (int j = 0; j < 11; ++j) {
            ma += w2[i][j] * A(y + i, x + j);
            mb += w2[i][j] * B(y + i, x + j);
          }
        double va = 0, vb = 0, cov = 0;
        for (int i = 0; i < 11; ++i)
          for (int j = 0; j < 11; ++j) {
            const double da = A(y + i, x + j) - ma;
            const double db = B(y + i, x + j) - mb;
            va += w2[i][j] * da * da;
            vb += w2[i][j] * db * db;
            cov += w2[i][j] * da * db;
          }
        acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    if (count == 0) throw ShapeError("no window");
    score += acc / static_cast<double>(count);
  }
  return score / static_cast<double>(C);
}

std::vector<GradCase> op_grad_cases() {
  std::vector<GradCase> cases;
  auto add_case = [&](std::string name, GradCheckFn fn, std::vector<Tensor64> in, double eps = 1e-4) {
    cases.push_back({std::move(name), std::move(fn), std::move(in), eps});
  };

  add_case("conv3d stride 1 pad 1",
           [](const std::vector<Tensor64>& x) { return conv3d(x[0], x[1], x[2], Conv3dOptions{{1, 1, 1}, {1, 1, 1}}); },
           {random64({1, 2, 3, 4, 4}, 1), random64({3, 2, 3, 3, 3}, 2), random64({3}, 3)});
  add_case("conv3d depth stride 2",
           [](const std::vector<Tensor64>& x) { return conv3d(x[0], x[1], x[2], Conv3dOptions{{2, 1, 1}, {1, 1, 1}}); },
           {random64({2, 2, 5, 3, 3}, 4), random64({2, 2, 3, 3, 3}, 5), random64({2}, 6)});
  add_case("conv3d pointwise, no bias",
           [](const std::vector<Tensor64>& x) { return conv3d(x[0], x[1], Tensor64(), Conv3dOptions{}); },
           {random64({1, 3, 2, 3, 3}, 7), random64({4, 3, 1, 1, 1}, 8)});
  add_case("conv2d strided",
           [](const std::vector<Tensor64>& x) { return conv2d(x[0], x[1], x[2], 2, 0); },
           {random64({2, 3, 4, 6}, 9), random64({2, 3, 2, 2}, 10), random64({2}, 11)});
  add_case("relu", [](const std::vector<Tensor64>& x) { return relu(x[0]); },
           {away_from_zero({3, 5}, 12)});
  add_case("leaky_relu", [](const std::vector<Tensor64>& x) { return leaky_relu(x[0], 0.2); },
           {away_from_zero({3, 5}, 13)});
  add_case("add", [](const std::vector<Tensor64>& x) { return add(x[0], x[1]); },
           {random64({2, 3}, 14), random64({2, 3}, 15)});
  add_case("scale", [](const std::vector<Tensor64>& x) { return scale(x[0], -1.7); },
           {random64({4}, 16)});
  add_case("concat axis 1", [](const std::vector<Tensor64>& x) { return concat<double>({x[0], x[1]}, 1); },
           {random64({2, 2, 3}, 17), random64({2, 1, 3}, 18)});
  add_case("stack", [](const std::vector<Tensor64>& x) { return stack<double>({x[0], x[1]}); },
           {random64({2, 3}, 19), random64({2, 3}, 20)});
  add_case("reshape", [](const std::vector<Tensor64>& x) { return reshape(x[0], {3, 4}); },
           {random64({2, 6}, 21)});
  add_case("permute", [](const std::vector<Tensor64>& x) { return permute(x[0], {2, 0, 1}); },
           {random64({2, 3, 4}, 22)});
  add_case("crop2d", [](const std::vector<Tensor64>& x) { return crop2d(x[0], 1, 2, 3, 2); },
           {random64({2, 5, 5}, 23)});
  add_case("resize_bilinear_2x", [](const std::vector<Tensor64>& x) { return resize_bilinear_2x(x[0]); },
           {random64({2, 3, 4}, 24)});
  add_case("avgpool_2x", [](const std::vector<Tensor64>& x) { return avgpool_2x(x[0]); },
           {random64({2, 4, 6}, 25)});
  add_case("pixel_shuffle", [](const std::vector<Tensor64>& x) { return pixel_shuffle(x[0], 2); },
           {random64({1, 8, 2, 3}, 26)});
  {
    // Keep |pred - target| >= 0.1 everywhere.
    Tensor64 target = random64({3, 4}, 27);
    Tensor64 offset = away_from_zero({3, 4}, 28);
    std::vector<double> p(target.data().begin(), target.data().end());
    for (size_t i = 0; i < p.size(); ++i) p[i] += offset.data()[i];
    add_case("l1_loss", [](const std::vector<Tensor64>& x) { return l1_loss(x[0], x[1]); },
             {Tensor64({3, 4}, p, true), target});
  }
  add_case("sum", [](const std::vector<Tensor64>& x) { return sum(x[0]); }, {random64({3, 3}, 29)});
  {
    Tensor64 w = random64({2, 3}, 30).detach();
    add_case("dot", [w](const std::vector<Tensor64>& x) { return dot(x[0], w); }, {random64({2, 3}, 31)});
  }
  {
    const Camera tgt = cam({3, 0.5, 1.5}, 8, 6, 7.0);
    const Camera src = cam({3, -0.4, 1.2}, 9, 7, 8.0);
    const SamplingGrid grid = plane_warp_grid(src, tgt, 3.0);
    add_case("bilinear_sample", [grid](const std::vector<Tensor64>& x) { return bilinear_sample(x[0], grid); },
             {random64({3, 7, 9}, 32)});
    const DepthSchedule schedule = make_depth_schedule(2.0, 5.0, 3);
    const Camera s2 = cam({2.8, 0.9, 1.6}, 9, 7, 8.0);
    add_case("build_dynamic_psv",
             [=](const std::vector<Tensor64>& x) {
               std::vector<Camera> cams{src, s2};
               return build_dynamic_psv<double>(x, cams, tgt, schedule).data;
             },
             {random64({3, 7, 9}, 33), random64({3, 7, 9}, 34)});
  }
  {
    ModelConfig mc{4, 4, 2, 3, 2, 1, 5};
    auto model = std::make_shared<GrvsModelT<double>>(mc);
    const Camera tgt = cam({3, 0.3, 1.4}, 8, 8, 8.0);
    const Camera prev = cam({3, 0.1, 1.3}, 8, 8, 8.0);
    const DepthSchedule schedule = make_depth_schedule(2.0, 5.0, 4);
    add_case("reproject_state",
             [=](const std::vector<Tensor64>& x) {
               return model->reproject_state({x[0], prev, true}, tgt, schedule);
             },
             {random64({1, 4, 4, 4}, 35)});
    add_case("patchify",
             [=](const std::vector<Tensor64>& x) {
               return model->patchify(PlaneSweepVolumeT<double>{x[0], schedule, tgt});
             },
             {random64({4, 3, 3, 8, 8}, 36)});
    add_case("latent_render",
             [=](const std::vector<Tensor64>& x) { return model->latent_render(x[0], x[1], tgt).z; },
             {random64({4, 4, 4, 4}, 37), random64({4, 4, 4, 4}, 38)}, 1e-6);
    add_case("unpatchify",
             [=](const std::vector<Tensor64>& x) { return model->unpatchify({x[0], tgt, true}); },
             {random64({1, 4, 4, 4}, 39)});
  }
  return cases;
}

GradCase forward_step_grad_case() {
  ModelConfig mc{4, 4, 2, 3, 2, 1, 11};
  auto model = std::make_shared<GrvsModelT<double>>(mc);
  const Camera tgt = cam({3.0, 0.25, 1.4}, 16, 16, 16.0);
  const Camera prev = cam({3.0, 0.15, 1.35}, 16, 16, 16.0);
  const std::vector<Camera> cams{cam({3.0, -0.3, 1.3}, 16, 16, 16.0), cam({3.0, 0.0, 1.4}, 16, 16, 16.0),
                                 cam({3.0, 0.3, 1.5}, 16, 16, 16.0)};
  const DepthSchedule schedule = make_depth_schedule(2.0, 6.0, 4);

  GradCase gc;
  gc.name = "forward_step (C=4, D=4, V=3, 16x16)";
  gc.epsilon = 1e-6;
  const size_t P = model->parameters().size();
  std::vector<std::string> names;
  for (const auto& [name, t] : model->parameters()) {
    names.push_back(name);
    gc.inputs.push_back(t);
  }
  for (int v = 0; v < 3; ++v) gc.inputs.push_back(random64({3, 16, 16}, 100 + static_cast<uint64_t>(v), 0.0, 1.0));
  gc.inputs.push_back(random64({1, 4, 8, 8}, 110));
  gc.fn = [=](const std::vector<Tensor64>& x) {
    // A fresh model whose parameters are the inputs under test.
    GrvsModelT<double> m(mc);
    for (size_t k = 0; k < P; ++k) m.replace_parameter(names[k], x[k]);
    std::vector<Tensor64> frames(x.begin() + static_cast<std::ptrdiff_t>(P),
                                 x.begin() + static_cast<std::ptrdiff_t>(P + 3));
    LatentStateT<double> state{x[P + 3], prev, true};
    return m.forward_step(frames, cams, tgt, state, schedule).prediction;
  };
  return gc;
}

}  // namespace grvs::oracle
