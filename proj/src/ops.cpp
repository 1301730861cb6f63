#include "grvs/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "grvs/errors.hpp"

namespace grvs {
namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatRM<T>>;
template <typename T>
using ConstMapRM = Eigen::Map<const MatRM<T>>;

thread_local ScopedMacCounter* g_mac_counter = nullptr;

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a) + " vs " +
                     to_string(b));
  }
}

int64_t conv_out(int64_t in, int64_t k, int stride, int pad) {
  if (stride < 1) throw ShapeError("convolution stride must be >= 1");
  const int64_t span = in + 2 * pad - k;
  if (span < 0) throw ShapeError("convolution kernel larger than padded input");
  return span / stride + 1;
}

struct ConvGeometry {
  int64_t batch, cin, d, h, w;
  int64_t cout, kd, kh, kw;
  int64_t od, oh, ow;
  std::array<int, 3> stride, pad;

  int64_t rows() const { return cin * kd * kh * kw; }
  int64_t cols() const { return od * oh * ow; }
  bool pointwise() const {
    return kd == 1 && kh == 1 && kw == 1 && stride == std::array<int, 3>{1, 1, 1} &&
           pad == std::array<int, 3>{0, 0, 0};
  }
};

ConvGeometry conv_geometry(const Shape& in, const Shape& wt, const Conv3dOptions& opt) {
  if (in.size() != 5) throw ShapeError("conv3d: input must be 5-D, got " + to_string(in));
  if (wt.size() != 5) throw ShapeError("conv3d: weight must be 5-D, got " + to_string(wt));
  if (in[1] != wt[1]) {
    throw ShapeError("conv3d: input channels " + std::to_string(in[1]) +
                     " do not match weight " + to_string(wt));
  }
  ConvGeometry g{};
  g.batch = in[0];
  g.cin = in[1];
  g.d = in[2];
  g.h = in[3];
  g.w = in[4];
  g.cout = wt[0];
  g.kd = wt[2];
  g.kh = wt[3];
  g.kw = wt[4];
  g.stride = opt.stride;
  g.pad = opt.padding;
  g.od = conv_out(g.d, g.kd, g.stride[0], g.pad[0]);
  g.oh = conv_out(g.h, g.kh, g.stride[1], g.pad[1]);
  g.ow = conv_out(g.w, g.kw, g.stride[2], g.pad[2]);
  return g;
}

// Row (ci, a, b, c) of the column matrix holds input[ci, od*s-p+a, ...] for
// every output position, zero where the tap falls into the padding.
template <typename T>
void im2col(const T* in, const ConvGeometry& g, T* col) {
  const int64_t plane = g.h * g.w;
  const int64_t volume = g.d * plane;
  const int64_t ncols = g.cols();
  for (int64_t ci = 0; ci < g.cin; ++ci) {
    for (int64_t a = 0; a < g.kd; ++a) {
      for (int64_t b = 0; b < g.kh; ++b) {
        for (int64_t c = 0; c < g.kw; ++c) {
          const int64_t row = ((ci * g.kd + a) * g.kh + b) * g.kw + c;
          T* dst = col + row * ncols;
          for (int64_t z = 0; z < g.od; ++z) {
            const int64_t iz = z * g.stride[0] - g.pad[0] + a;
            for (int64_t y = 0; y < g.oh; ++y) {
              T* out = dst + (z * g.oh + y) * g.ow;
              const int64_t iy = y * g.stride[1] - g.pad[1] + b;
              if (iz < 0 || iz >= g.d || iy < 0 || iy >= g.h) {
                std::fill(out, out + g.ow, T(0));
                continue;
              }
              const T* src = in + ci * volume + iz * plane + iy * g.w;
              for (int64_t x = 0; x < g.ow; ++x) {
                const int64_t ix = x * g.stride[2] - g.pad[2] + c;
                out[x] = (ix >= 0 && ix < g.w) ? src[ix] : T(0);
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, const ConvGeometry& g, T* in) {
  const int64_t plane = g.h * g.w;
  const int64_t volume = g.d * plane;
  const int64_t ncols = g.cols();
  for (int64_t ci = 0; ci < g.cin; ++ci) {
    for (int64_t a = 0; a < g.kd; ++a) {
      for (int64_t b = 0; b < g.kh; ++b) {
        for (int64_t c = 0; c < g.kw; ++c) {
          const int64_t row = ((ci * g.kd + a) * g.kh + b) * g.kw + c;
          const T* src = col + row * ncols;
          for (int64_t z = 0; z < g.od; ++z) {
            const int64_t iz = z * g.stride[0] - g.pad[0] + a;
            if (iz < 0 || iz >= g.d) continue;
            for (int64_t y = 0; y < g.oh; ++y) {
              const int64_t iy = y * g.stride[1] - g.pad[1] + b;
              if (iy < 0 || iy >= g.h) continue;
              const T* s = src + (z * g.oh + y) * g.ow;
              T* dst = in + ci * volume + iz * plane + iy * g.w;
              for (int64_t x = 0; x < g.ow; ++x) {
                const int64_t ix = x * g.stride[2] - g.pad[2] + c;
                if (ix >= 0 && ix < g.w) dst[ix] += s[x];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
std::vector<T> to_vector(std::span<const T> s) {
  return std::vector<T>(s.begin(), s.end());
}

}  // namespace

ScopedMacCounter::ScopedMacCounter() : previous_(g_mac_counter) { g_mac_counter = this; }
ScopedMacCounter::~ScopedMacCounter() { g_mac_counter = previous_; }

void record_macs(int64_t macs) {
  for (ScopedMacCounter* c = g_mac_counter; c != nullptr; c = c->previous_) c->macs_ += macs;
}

int64_t conv3d_macs(const Shape& input, const Shape& weight, const Conv3dOptions& options) {
  const ConvGeometry g = conv_geometry(input, weight, options);
  return g.batch * g.cout * g.rows() * g.cols();
}

template <typename T>
TensorT<T> conv3d(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                  const Conv3dOptions& options) {
  const ConvGeometry g = conv_geometry(input.shape(), weight.shape(), options);
  if (bias.defined() && bias.shape() != Shape{g.cout}) {
    throw ShapeError("conv3d: bias shape " + to_string(bias.shape()) + " expected (" +
                     std::to_string(g.cout) + ")");
  }
  const int64_t K = g.rows();
  const int64_t P = g.cols();
  const int64_t in_stride = g.cin * g.d * g.h * g.w;
  std::vector<T> out(static_cast<size_t>(g.batch * g.cout * P));
  std::vector<T> col;
  if (!g.pointwise()) col.resize(static_cast<size_t>(K * P));

  ConstMapRM<T> wmat(weight.data().data(), g.cout, K);
  for (int64_t n = 0; n < g.batch; ++n) {
    const T* in = input.data().data() + n * in_stride;
    const T* colp = in;
    if (!g.pointwise()) {
      im2col(in, g, col.data());
      colp = col.data();
    }
    MapRM<T> o(out.data() + n * g.cout * P, g.cout, P);
    o.noalias() = wmat * ConstMapRM<T>(colp, K, P);
    if (bias.defined()) {
      for (int64_t co = 0; co < g.cout; ++co) o.row(co).array() += bias.data()[co];
    }
  }
  record_macs(g.batch * g.cout * K * P);

  Shape out_shape{g.batch, g.cout, g.od, g.oh, g.ow};
  std::vector<TensorT<T>> parents{input, weight};
  if (bias.defined()) parents.push_back(bias);
  return TensorT<T>::make_result(
      std::move(out_shape), std::move(out), parents,
      [g, K, P, in_stride, has_bias = bias.defined()](const detail::Node<T>& self) {
        auto& in_node = *self.parents[0];
        auto& w_node = *self.parents[1];
        ConstMapRM<T> wmat(w_node.data.data(), g.cout, K);
        std::vector<T> col;
        std::vector<T> dcol;
        if (!g.pointwise()) col.resize(static_cast<size_t>(K * P));
        if (in_node.requires_grad && !g.pointwise()) dcol.resize(static_cast<size_t>(K * P));
        for (int64_t n = 0; n < g.batch; ++n) {
          ConstMapRM<T> dout(self.grad.data() + n * g.cout * P, g.cout, P);
          const T* in = in_node.data.data() + n * in_stride;
          if (w_node.requires_grad) {
            const T* colp = in;
            if (!g.pointwise()) {
              im2col(in, g, col.data());
              colp = col.data();
            }
            MapRM<T> dw(w_node.ensure_grad().data(), g.cout, K);
            dw.noalias() += dout * ConstMapRM<T>(colp, K, P).transpose();
          }
          if (has_bias && self.parents[2]->requires_grad) {
            T* db = self.parents[2]->ensure_grad().data();
            // Plain loop: Eigen's vectorised sum depends on pointer alignment,
            // which would make gradients differ between identical runs.
            for (int64_t co = 0; co < g.cout; ++co) {
              const T* row = self.grad.data() + (n * g.cout + co) * P;
              double acc = 0.0;
              for (int64_t j = 0; j < P; ++j) acc += row[j];
              db[co] += static_cast<T>(acc);
            }
          }
          if (in_node.requires_grad) {
            T* din = in_node.ensure_grad().data() + n * in_stride;
            if (g.pointwise()) {
              MapRM<T>(din, K, P).noalias() += wmat.transpose() * dout;
            } else {
              MapRM<T> dc(dcol.data(), K, P);
              dc.noalias() = wmat.transpose() * dout;
              col2im(dcol.data(), g, din);
            }
          }
        }
      });
}

template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                  int stride, int padding) {
  if (input.rank() != 4) throw ShapeError("conv2d: input must be 4-D, got " + to_string(input.shape()));
  if (weight.rank() != 4) throw ShapeError("conv2d: weight must be 4-D, got " + to_string(weight.shape()));
  const Shape& is = input.shape();
  const Shape& ws = weight.shape();
  Conv3dOptions opt;
  opt.stride = {1, stride, stride};
  opt.padding = {0, padding, padding};
  TensorT<T> out = conv3d(reshape(input, Shape{is[0], is[1], 1, is[2], is[3]}),
                          reshape(weight, Shape{ws[0], ws[1], 1, ws[2], ws[3]}), bias, opt);
  const Shape& os = out.shape();
  return reshape(out, Shape{os[0], os[1], os[3], os[4]});
}

template <typename T>
TensorT<T> relu(const TensorT<T>& x) {
  return leaky_relu(x, T(0));
}

template <typename T>
TensorT<T> leaky_relu(const TensorT<T>& x, T alpha) {
  std::vector<T> out = to_vector(x.data());
  for (T& v : out) v = v > T(0) ? v : alpha * v;
  return TensorT<T>::make_result(x.shape(), std::move(out), {x},
                                 [alpha](const detail::Node<T>& self) {
                                   auto& p = *self.parents[0];
                                   auto& g = p.ensure_grad();
                                   for (size_t i = 0; i < g.size(); ++i) {
                                     g[i] += p.data[i] > T(0) ? self.grad[i] : alpha * self.grad[i];
                                   }
                                 });
}

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  std::vector<T> out = to_vector(a.data());
  for (size_t i = 0; i < out.size(); ++i) out[i] += b.data()[i];
  return TensorT<T>::make_result(a.shape(), std::move(out), {a, b},
                                 [](const detail::Node<T>& self) {
                                   for (const auto& p : self.parents) {
                                     if (!p->requires_grad) continue;
                                     auto& g = p->ensure_grad();
                                     for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                                   }
                                 });
}

template <typename T>
TensorT<T> scale(const TensorT<T>& x, T factor) {
  std::vector<T> out = to_vector(x.data());
  for (T& v : out) v *= factor;
  return TensorT<T>::make_result(x.shape(), std::move(out), {x},
                                 [factor](const detail::Node<T>& self) {
                                   auto& g = self.parents[0]->ensure_grad();
                                   for (size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
                                 });
}

template <typename T>
TensorT<T> concat(const std::vector<TensorT<T>>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts.front().shape();
  const int rank = static_cast<int>(first.size());
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw ShapeError("concat: axis out of range");
  const int64_t outer = std::accumulate(first.begin(), first.begin() + axis, int64_t{1},
                                        std::multiplies<>());
  const int64_t inner = std::accumulate(first.begin() + axis + 1, first.end(), int64_t{1},
                                        std::multiplies<>());
  Shape out_shape = first;
  out_shape[static_cast<size_t>(axis)] = 0;
  std::vector<int64_t> chunk;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (static_cast<int>(s.size()) != rank) throw ShapeError("concat: rank mismatch");
    for (int i = 0; i < rank; ++i) {
      if (i != axis && s[static_cast<size_t>(i)] != first[static_cast<size_t>(i)]) {
        throw ShapeError("concat: shape mismatch " + to_string(s) + " vs " + to_string(first));
      }
    }
    out_shape[static_cast<size_t>(axis)] += s[static_cast<size_t>(axis)];
    chunk.push_back(s[static_cast<size_t>(axis)] * inner);
  }
  const int64_t row = std::accumulate(chunk.begin(), chunk.end(), int64_t{0});
  std::vector<T> out(static_cast<size_t>(outer * row));
  int64_t offset = 0;
  for (size_t k = 0; k < parts.size(); ++k) {
    const T* src = parts[k].data().data();
    for (int64_t o = 0; o < outer; ++o) {
      std::copy_n(src + o * chunk[k], chunk[k], out.data() + o * row + offset);
    }
    offset += chunk[k];
  }
  return TensorT<T>::make_result(std::move(out_shape), std::move(out), parts,
                                 [chunk, outer, row](const detail::Node<T>& self) {
                                   int64_t offset = 0;
                                   for (size_t k = 0; k < self.parents.size(); ++k) {
                                     auto& p = *self.parents[k];
                                     if (p.requires_grad) {
                                       auto& g = p.ensure_grad();
                                       for (int64_t o = 0; o < outer; ++o) {
                                         const T* src = self.grad.data() + o * row + offset;
                                         T* dst = g.data() + o * chunk[k];
                                         for (int64_t i = 0; i < chunk[k]; ++i) dst[i] += src[i];
                                       }
                                     }
                                     offset += chunk[k];
                                   }
                                 });
}

template <typename T>
TensorT<T> stack(const std::vector<TensorT<T>>& parts) {
  if (parts.empty()) throw ShapeError("stack: no inputs");
  std::vector<TensorT<T>> expanded;
  expanded.reserve(parts.size());
  for (const auto& p : parts) {
    require_same_shape(p.shape(), parts.front().shape(), "stack");
    Shape s = p.shape();
    s.insert(s.begin(), 1);
    expanded.push_back(reshape(p, std::move(s)));
  }
  return concat(expanded, 0);
}

template <typename T>
TensorT<T> reshape(const TensorT<T>& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  return TensorT<T>::make_result(std::move(shape), to_vector(x.data()), {x},
                                 [](const detail::Node<T>& self) {
                                   auto& g = self.parents[0]->ensure_grad();
                                   for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                                 });
}

template <typename T>
TensorT<T> permute(const TensorT<T>& x, const std::vector<int>& axes) {
  const Shape& in = x.shape();
  const size_t rank = in.size();
  if (axes.size() != rank) throw ShapeError("permute: axes length must equal rank");
  std::vector<bool> used(rank, false);
  for (int a : axes) {
    if (a < 0 || static_cast<size_t>(a) >= rank || used[static_cast<size_t>(a)]) {
      throw ShapeError("permute: invalid axis list");
    }
    used[static_cast<size_t>(a)] = true;
  }
  std::vector<int64_t> in_strides(rank, 1);
  for (size_t i = rank; i-- > 1;) in_strides[i - 1] = in_strides[i] * in[i];
  Shape out_shape(rank);
  std::vector<int64_t> src_stride(rank);
  for (size_t i = 0; i < rank; ++i) {
    out_shape[i] = in[static_cast<size_t>(axes[i])];
    src_stride[i] = in_strides[static_cast<size_t>(axes[i])];
  }
  // gather[j] = source index of output element j
  const int64_t n = x.numel();
  std::vector<int64_t> gather(static_cast<size_t>(n));
  std::vector<int64_t> idx(rank, 0);
  int64_t src = 0;
  for (int64_t j = 0; j < n; ++j) {
    gather[static_cast<size_t>(j)] = src;
    for (size_t i = rank; i-- > 0;) {
      if (++idx[i] < out_shape[i]) {
        src += src_stride[i];
        break;
      }
      src -= src_stride[i] * (out_shape[i] - 1);
      idx[i] = 0;
    }
  }
  std::vector<T> out(static_cast<size_t>(n));
  for (int64_t j = 0; j < n; ++j) out[static_cast<size_t>(j)] = x.data()[gather[static_cast<size_t>(j)]];
  return TensorT<T>::make_result(std::move(out_shape), std::move(out), {x},
                                 [gather = std::move(gather)](const detail::Node<T>& self) {
                                   auto& g = self.parents[0]->ensure_grad();
                                   for (size_t j = 0; j < gather.size(); ++j) {
                                     g[static_cast<size_t>(gather[j])] += self.grad[j];
                                   }
                                 });
}

template <typename T>
TensorT<T> crop2d(const TensorT<T>& x, int64_t top, int64_t left, int64_t height,
                  int64_t width) {
  if (x.rank() < 2) throw ShapeError("crop2d: rank must be >= 2");
  const int64_t H = x.dim(-2);
  const int64_t W = x.dim(-1);
  if (top < 0 || left < 0 || height < 1 || width < 1 || top + height > H || left + width > W) {
    throw ShapeError("crop2d: window out of bounds for " + to_string(x.shape()));
  }
  const int64_t planes = x.numel() / (H * W);
  Shape out_shape = x.shape();
  out_shape[out_shape.size() - 2] = height;
  out_shape[out_shape.size() - 1] = width;
  std::vector<T> out(static_cast<size_t>(planes * height * width));
  for (int64_t p = 0; p < planes; ++p) {
    for (int64_t y = 0; y < height; ++y) {
      const T* src = x.data().data() + (p * H + top + y) * W + left;
      std::copy_n(src, width, out.data() + (p * height + y) * width);
    }
  }
  return TensorT<T>::make_result(
      std::move(out_shape), std::move(out), {x},
      [=](const detail::Node<T>& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (int64_t p = 0; p < planes; ++p) {
          for (int64_t y = 0; y < height; ++y) {
            T* dst = g.data() + (p * H + top + y) * W + left;
            const T* src = self.grad.data() + (p * height + y) * width;
            for (int64_t i = 0; i < width; ++i) dst[i] += src[i];
          }
        }
      });
}

namespace {

// Source taps of 2x half-pixel upsampling along one axis of length n.
struct UpTap {
  int64_t i0, i1;
  double w0, w1;
};

std::vector<UpTap> upsample_taps(int64_t n) {
  std::vector<UpTap> taps(static_cast<size_t>(2 * n));
  for (int64_t o = 0; o < 2 * n; ++o) {
    const double src = (static_cast<double>(o) + 0.5) / 2.0 - 0.5;
    const double f = std::floor(src);
    const double frac = src - f;
    const int64_t i0 = std::clamp<int64_t>(static_cast<int64_t>(f), 0, n - 1);
    const int64_t i1 = std::clamp<int64_t>(static_cast<int64_t>(f) + 1, 0, n - 1);
    taps[static_cast<size_t>(o)] = {i0, i1, 1.0 - frac, frac};
  }
  return taps;
}

}  // namespace

template <typename T>
TensorT<T> resize_bilinear_2x(const TensorT<T>& x) {
  if (x.rank() < 2) throw ShapeError("resize_bilinear_2x: rank must be >= 2");
  const int64_t H = x.dim(-2);
  const int64_t W = x.dim(-1);
  const int64_t planes = x.numel() / (H * W);
  const auto ty = upsample_taps(H);
  const auto tx = upsample_taps(W);
  Shape out_shape = x.shape();
  out_shape[out_shape.size() - 2] = 2 * H;
  out_shape[out_shape.size() - 1] = 2 * W;
  const int64_t OH = 2 * H;
  const int64_t OW = 2 * W;
  std::vector<T> out(static_cast<size_t>(planes * OH * OW));
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = x.data().data() + p * H * W;
    T* dst = out.data() + p * OH * OW;
    for (int64_t y = 0; y < OH; ++y) {
      const UpTap& a = ty[static_cast<size_t>(y)];
      for (int64_t xx = 0; xx < OW; ++xx) {
        const UpTap& b = tx[static_cast<size_t>(xx)];
        dst[y * OW + xx] = static_cast<T>(
            a.w0 * (b.w0 * src[a.i0 * W + b.i0] + b.w1 * src[a.i0 * W + b.i1]) +
            a.w1 * (b.w0 * src[a.i1 * W + b.i0] + b.w1 * src[a.i1 * W + b.i1]));
      }
    }
  }
  return TensorT<T>::make_result(
      std::move(out_shape), std::move(out), {x},
      [=](const detail::Node<T>& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (int64_t p = 0; p < planes; ++p) {
          T* dst = g.data() + p * H * W;
          const T* go = self.grad.data() + p * OH * OW;
          for (int64_t y = 0; y < OH; ++y) {
            const UpTap& a = ty[static_cast<size_t>(y)];
            for (int64_t xx = 0; xx < OW; ++xx) {
              const UpTap& b = tx[static_cast<size_t>(xx)];
              const double v = go[y * OW + xx];
              dst[a.i0 * W + b.i0] += static_cast<T>(a.w0 * b.w0 * v);
              dst[a.i0 * W + b.i1] += static_cast<T>(a.w0 * b.w1 * v);
              dst[a.i1 * W + b.i0] += static_cast<T>(a.w1 * b.w0 * v);
              dst[a.i1 * W + b.i1] += static_cast<T>(a.w1 * b.w1 * v);
            }
          }
        }
      });
}

template <typename T>
TensorT<T> avgpool_2x(const TensorT<T>& x) {
  if (x.rank() < 2) throw ShapeError("avgpool_2x: rank must be >= 2");
  const int64_t H = x.dim(-2);
  const int64_t W = x.dim(-1);
  if (H % 2 != 0 || W % 2 != 0) {
    throw ShapeError("avgpool_2x: spatial dims must be even, got " + to_string(x.shape()));
  }
  const int64_t planes = x.numel() / (H * W);
  const int64_t OH = H / 2;
  const int64_t OW = W / 2;
  Shape out_shape = x.shape();
  out_shape[out_shape.size() - 2] = OH;
  out_shape[out_shape.size() - 1] = OW;
  std::vector<T> out(static_cast<size_t>(planes * OH * OW));
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = x.data().data() + p * H * W;
    for (int64_t y = 0; y < OH; ++y) {
      for (int64_t xx = 0; xx < OW; ++xx) {
        const T* s = src + 2 * y * W + 2 * xx;
        out[static_cast<size_t>((p * OH + y) * OW + xx)] =
            (s[0] + s[1] + s[W] + s[W + 1]) * T(0.25);
      }
    }
  }
  return TensorT<T>::make_result(std::move(out_shape), std::move(out), {x},
                                 [=](const detail::Node<T>& self) {
                                   auto& g = self.parents[0]->ensure_grad();
                                   for (int64_t p = 0; p < planes; ++p) {
                                     for (int64_t y = 0; y < OH; ++y) {
                                       for (int64_t xx = 0; xx < OW; ++xx) {
                                         const T v = self.grad[static_cast<size_t>((p * OH + y) * OW + xx)] * T(0.25);
                                         T* d = g.data() + p * H * W + 2 * y * W + 2 * xx;
                                         d[0] += v;
                                         d[1] += v;
                                         d[W] += v;
                                         d[W + 1] += v;
                                       }
                                     }
                                   }
                                 });
}

template <typename T>
TensorT<T> pixel_shuffle(const TensorT<T>& x, int factor) {
  if (x.rank() != 4) throw ShapeError("pixel_shuffle: input must be 4-D");
  const int64_t f = factor;
  const int64_t N = x.dim(0);
  const int64_t CF = x.dim(1);
  const int64_t h = x.dim(2);
  const int64_t w = x.dim(3);
  if (f < 1 || CF % (f * f) != 0) {
    throw ShapeError("pixel_shuffle: channels " + std::to_string(CF) + " not divisible by " +
                     std::to_string(f * f));
  }
  const int64_t C = CF / (f * f);
  const int64_t H = h * f;
  const int64_t W = w * f;
  // gather[j] = source index of output element j
  std::vector<int64_t> gather(static_cast<size_t>(x.numel()));
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c)
      for (int64_t Y = 0; Y < H; ++Y)
        for (int64_t X = 0; X < W; ++X) {
          const int64_t ch = c * f * f + (Y % f) * f + (X % f);
          gather[static_cast<size_t>(((n * C + c) * H + Y) * W + X)] =
              ((n * CF + ch) * h + Y / f) * w + X / f;
        }
  std::vector<T> out(gather.size());
  for (size_t j = 0; j < gather.size(); ++j) out[j] = x.data()[static_cast<size_t>(gather[j])];
  return TensorT<T>::make_result(Shape{N, C, H, W}, std::move(out), {x},
                                 [gather = std::move(gather)](const detail::Node<T>& self) {
                                   auto& g = self.parents[0]->ensure_grad();
                                   for (size_t j = 0; j < gather.size(); ++j) {
                                     g[static_cast<size_t>(gather[j])] += self.grad[j];
                                   }
                                 });
}

template <typename T>
TensorT<T> l1_loss(const TensorT<T>& pred, const TensorT<T>& target) {
  require_same_shape(pred.shape(), target.shape(), "l1_loss");
  const size_t n = static_cast<size_t>(pred.numel());
  if (n == 0) throw ShapeError("l1_loss: empty tensors");
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += std::abs(double(pred.data()[i]) - double(target.data()[i]));
  const T mean = static_cast<T>(acc / static_cast<double>(n));
  return TensorT<T>::make_result(Shape{}, std::vector<T>{mean}, {pred, target},
                                 [n](const detail::Node<T>& self) {
                                   const auto& p = *self.parents[0];
                                   const auto& t = *self.parents[1];
                                   const T scale = self.grad[0] / static_cast<T>(n);
                                   for (int k = 0; k < 2; ++k) {
                                     auto& node = *self.parents[static_cast<size_t>(k)];
                                     if (!node.requires_grad) continue;
                                     auto& g = node.ensure_grad();
                                     const T sgn = k == 0 ? T(1) : T(-1);
                                     for (size_t i = 0; i < n; ++i) {
                                       const T d = p.data[i] - t.data[i];
                                       const T s = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
                                       g[i] += sgn * s * scale;
                                     }
                                   }
                                 });
}

template <typename T>
TensorT<T> sum(const TensorT<T>& x) {
  double acc = 0.0;
  for (T v : x.data()) acc += v;
  return TensorT<T>::make_result(Shape{}, std::vector<T>{static_cast<T>(acc)}, {x},
                                 [](const detail::Node<T>& self) {
                                   auto& g = self.parents[0]->ensure_grad();
                                   for (T& v : g) v += self.grad[0];
                                 });
}

template <typename T>
TensorT<T> dot(const TensorT<T>& x, const TensorT<T>& w) {
  require_same_shape(x.shape(), w.shape(), "dot");
  double acc = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) acc += double(x.data()[i]) * double(w.data()[i]);
  TensorT<T> weights = w.detach();
  return TensorT<T>::make_result(Shape{}, std::vector<T>{static_cast<T>(acc)}, {x},
                                 [weights](const detail::Node<T>& self) {
                                   auto& g = self.parents[0]->ensure_grad();
                                   for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * weights.data()[i];
                                 });
}

#define GRVS_INSTANTIATE_OPS(T)                                                                  \
  template TensorT<T> conv3d(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&,           \
                             const Conv3dOptions&);                                             \
  template TensorT<T> conv2d(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, int, int); \
  template TensorT<T> relu(const TensorT<T>&);                                                  \
  template TensorT<T> leaky_relu(const TensorT<T>&, T);                                         \
  template TensorT<T> add(const TensorT<T>&, const TensorT<T>&);                                \
  template TensorT<T> scale(const TensorT<T>&, T);                                              \
  template TensorT<T> concat(const std::vector<TensorT<T>>&, int);                              \
  template TensorT<T> stack(const std::vector<TensorT<T>>&);                                    \
  template TensorT<T> reshape(const TensorT<T>&, Shape);                                        \
  template TensorT<T> permute(const TensorT<T>&, const std::vector<int>&);                      \
  template TensorT<T> crop2d(const TensorT<T>&, int64_t, int64_t, int64_t, int64_t);            \
  template TensorT<T> resize_bilinear_2x(const TensorT<T>&);                                    \
  template TensorT<T> avgpool_2x(const TensorT<T>&);                                            \
  template TensorT<T> pixel_shuffle(const TensorT<T>&, int);                                    \
  template TensorT<T> l1_loss(const TensorT<T>&, const TensorT<T>&);                            \
  template TensorT<T> sum(const TensorT<T>&);                                                   \
  template TensorT<T> dot(const TensorT<T>&, const TensorT<T>&);

GRVS_INSTANTIATE_OPS(float)
GRVS_INSTANTIATE_OPS(double)

}  // namespace grvs
