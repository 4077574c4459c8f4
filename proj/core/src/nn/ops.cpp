#include "nuclick/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nuclick::nn {

std::string shape_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ')';
  return os.str();
}

namespace {

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

template <class T>
Var<T> make_output(Tensor<T> value, bool requires_grad) {
  auto out = std::make_shared<Node<T>>();
  out->value = std::move(value);
  out->requires_grad = requires_grad;
  return out;
}

void require_rank4(const std::vector<int>& s, const char* what) {
  if (s.size() != 4) throw InvalidInput(std::string(what) + ": expected rank-4 tensor, got " + shape_string(s));
}

struct ConvGeometry {
  int channels, height, width;
  int kernel, stride, dilation, pad;
  int out_h, out_w;
};

ConvGeometry conv_geometry(const std::vector<int>& xs, int kernel, int stride, int dilation) {
  ConvGeometry g{xs[1], xs[2], xs[3], kernel, stride, dilation, dilation * (kernel - 1) / 2, 0, 0};
  g.out_h = (g.height + 2 * g.pad - dilation * (kernel - 1) - 1) / stride + 1;
  g.out_w = (g.width + 2 * g.pad - dilation * (kernel - 1) - 1) / stride + 1;
  return g;
}

// Output columns [lo, hi) whose input column ox * stride - pad + offset lies inside [0, width).
struct ColumnRange {
  int lo, hi;
};

ColumnRange valid_columns(const ConvGeometry& g, int offset) {
  auto ceil_div = [](int a, int b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); };
  const int lo = std::max(0, ceil_div(g.pad - offset, g.stride));
  const int hi = std::min(g.out_w, ceil_div(g.width + g.pad - offset, g.stride));
  return {lo, std::max(lo, hi)};
}

// cols: (C * k * k) x (out_h * out_w), row-major.
template <class T>
void im2col(const T* x, const ConvGeometry& g, T* cols) {
  const int plane = g.out_h * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    const T* src = x + static_cast<std::size_t>(c) * g.height * g.width;
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        T* row = cols + ((static_cast<std::size_t>(c) * g.kernel + ky) * g.kernel + kx) * plane;
        const ColumnRange r = valid_columns(g, kx * g.dilation);
        const int shift = kx * g.dilation - g.pad;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky * g.dilation;
          T* dst = row + static_cast<std::size_t>(oy) * g.out_w;
          if (iy < 0 || iy >= g.height) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* line = src + static_cast<std::size_t>(iy) * g.width;
          std::fill(dst, dst + r.lo, T(0));
          if (g.stride == 1) {
            std::copy(line + r.lo + shift, line + r.hi + shift, dst + r.lo);
          } else {
            for (int ox = r.lo; ox < r.hi; ++ox) dst[ox] = line[ox * g.stride + shift];
          }
          std::fill(dst + r.hi, dst + g.out_w, T(0));
        }
      }
    }
  }
}

template <class T>
void col2im_add(const T* cols, const ConvGeometry& g, T* x) {
  const int plane = g.out_h * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    T* dst = x + static_cast<std::size_t>(c) * g.height * g.width;
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        const T* row = cols + ((static_cast<std::size_t>(c) * g.kernel + ky) * g.kernel + kx) * plane;
        const ColumnRange r = valid_columns(g, kx * g.dilation);
        const int shift = kx * g.dilation - g.pad;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky * g.dilation;
          if (iy < 0 || iy >= g.height) continue;
          T* line = dst + static_cast<std::size_t>(iy) * g.width;
          const T* src = row + static_cast<std::size_t>(oy) * g.out_w;
          if (g.stride == 1) {
            T* out = line + shift;
            for (int ox = r.lo; ox < r.hi; ++ox) out[ox] += src[ox];
          } else {
            for (int ox = r.lo; ox < r.hi; ++ox) line[ox * g.stride + shift] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <class T>
Var<T> conv2d(Context<T>& ctx, const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride, int dilation) {
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  require_rank4(xs, "conv2d input");
  require_rank4(ws, "conv2d weights");
  if (ws[1] != xs[1]) throw InvalidInput("conv2d: channel mismatch " + shape_string(xs) + " vs " + shape_string(ws));
  if (ws[2] != ws[3] || ws[2] % 2 == 0) throw InvalidInput("conv2d: kernel must be square and odd");
  if (b && (b->value.rank() != 1 || b->value.dim(0) != ws[0])) throw InvalidInput("conv2d: bias shape mismatch");
  if (stride < 1 || dilation < 1) throw InvalidInput("conv2d: stride and dilation must be positive");

  const int batch = xs[0];
  const int out_c = ws[0];
  const ConvGeometry g = conv_geometry(xs, ws[2], stride, dilation);
  const int k_rows = g.channels * g.kernel * g.kernel;
  const int plane = g.out_h * g.out_w;
  const bool pointwise = g.kernel == 1 && stride == 1;

  Tensor<T> out({batch, out_c, g.out_h, g.out_w});
  AlignedVector<T> cols(pointwise ? 0 : static_cast<std::size_t>(k_rows) * plane);
  ConstMatMap<T> wm(w->value.data(), out_c, k_rows);
  const std::size_t in_stride = static_cast<std::size_t>(g.channels) * g.height * g.width;
  const std::size_t out_stride = static_cast<std::size_t>(out_c) * plane;
  for (int n = 0; n < batch; ++n) {
    const T* xn = x->value.data() + n * in_stride;
    const T* colp = xn;
    if (!pointwise) {
      im2col(xn, g, cols.data());
      colp = cols.data();
    }
    MatMap<T> om(out.data() + n * out_stride, out_c, plane);
    om.noalias() = wm * ConstMatMap<T>(colp, k_rows, plane);
    if (b) om.colwise() += Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(b->value.data(), out_c);
  }

  auto y = make_output(std::move(out), ctx.records({&x, &w, &b}));
  if (!y->requires_grad) return y;
  std::weak_ptr<Node<T>> wy = y;
  ctx.tape->record([x, w, b, wy, g, batch, out_c, k_rows, plane, pointwise, in_stride, out_stride]() {
    auto y = wy.lock();
    if (!y || !y->has_grad()) return;
    AlignedVector<T> cols(pointwise ? 0 : static_cast<std::size_t>(k_rows) * plane);
    AlignedVector<T> dcols(static_cast<std::size_t>(k_rows) * plane);
    ConstMatMap<T> wm(w->value.data(), out_c, k_rows);
    for (int n = 0; n < batch; ++n) {
      ConstMatMap<T> dy(y->grad.data() + n * out_stride, out_c, plane);
      const T* xn = x->value.data() + n * in_stride;
      const T* colp = xn;
      if (w->requires_grad) {
        if (!pointwise) {
          im2col(xn, g, cols.data());
          colp = cols.data();
        }
        MatMap<T>(w->grad_buffer().data(), out_c, k_rows).noalias() += dy * ConstMatMap<T>(colp, k_rows, plane).transpose();
      }
      if (b && b->requires_grad) {
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(b->grad_buffer().data(), out_c) += dy.rowwise().sum();
      }
      if (x->requires_grad) {
        T* dxn = x->grad_buffer().data() + n * in_stride;
        if (pointwise) {
          MatMap<T>(dxn, k_rows, plane).noalias() += wm.transpose() * dy;
        } else {
          MatMap<T>(dcols.data(), k_rows, plane).noalias() = wm.transpose() * dy;
          col2im_add(dcols.data(), g, dxn);
        }
      }
    }
  });
  return y;
}

template <class T>
Var<T> up2(Context<T>& ctx, const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  require_rank4(xs, "up2 input");
  require_rank4(ws, "up2 weights");
  if (ws[0] != xs[1] || ws[2] != 2 || ws[3] != 2) throw InvalidInput("up2: weight shape mismatch " + shape_string(ws));
  const int batch = xs[0];
  const int in_c = xs[1];
  const int h = xs[2];
  const int wd = xs[3];
  const int out_c = ws[1];
  if (b && (b->value.rank() != 1 || b->value.dim(0) != out_c)) throw InvalidInput("up2: bias shape mismatch");
  const int plane = h * wd;
  const int taps = out_c * 4;

  Tensor<T> out({batch, out_c, 2 * h, 2 * wd});
  RowMatrix<T> cols(taps, plane);
  ConstMatMap<T> wm(w->value.data(), in_c, taps);
  for (int n = 0; n < batch; ++n) {
    ConstMatMap<T> xn(x->value.data() + static_cast<std::size_t>(n) * in_c * plane, in_c, plane);
    cols.noalias() = wm.transpose() * xn;
    for (int co = 0; co < out_c; ++co) {
      const T bias = b ? b->value[co] : T(0);
      for (int tap = 0; tap < 4; ++tap) {
        const int a = tap / 2;
        const int c = tap % 2;
        const T* src = cols.data() + static_cast<std::size_t>(co * 4 + tap) * plane;
        for (int i = 0; i < h; ++i) {
          for (int j = 0; j < wd; ++j) out.at(n, co, 2 * i + a, 2 * j + c) = src[i * wd + j] + bias;
        }
      }
    }
  }

  auto y = make_output(std::move(out), ctx.records({&x, &w, &b}));
  if (!y->requires_grad) return y;
  std::weak_ptr<Node<T>> wy = y;
  ctx.tape->record([x, w, b, wy, batch, in_c, h, wd, out_c, plane, taps]() {
    auto y = wy.lock();
    if (!y || !y->has_grad()) return;
    RowMatrix<T> dcols(taps, plane);
    ConstMatMap<T> wm(w->value.data(), in_c, taps);
    for (int n = 0; n < batch; ++n) {
      for (int co = 0; co < out_c; ++co) {
        for (int tap = 0; tap < 4; ++tap) {
          const int a = tap / 2;
          const int c = tap % 2;
          T* dst = dcols.data() + static_cast<std::size_t>(co * 4 + tap) * plane;
          for (int i = 0; i < h; ++i) {
            for (int j = 0; j < wd; ++j) dst[i * wd + j] = y->grad.at(n, co, 2 * i + a, 2 * j + c);
          }
        }
      }
      const std::size_t xo = static_cast<std::size_t>(n) * in_c * plane;
      if (w->requires_grad) {
        MatMap<T>(w->grad_buffer().data(), in_c, taps).noalias() +=
            ConstMatMap<T>(x->value.data() + xo, in_c, plane) * dcols.transpose();
      }
      if (b && b->requires_grad) {
        auto& bg = b->grad_buffer();
        for (int co = 0; co < out_c; ++co) bg[co] += dcols.middleRows(co * 4, 4).sum();
      }
      if (x->requires_grad) {
        MatMap<T>(x->grad_buffer().data() + xo, in_c, plane).noalias() += wm * dcols;
      }
    }
  });
  return y;
}

template <class T>
Var<T> down2(Context<T>& ctx, const Var<T>& x) {
  const auto& xs = x->value.shape();
  require_rank4(xs, "down2");
  if (xs[2] % 2 || xs[3] % 2) throw InvalidInput("down2: odd spatial size " + shape_string(xs));
  const int oh = xs[2] / 2;
  const int ow = xs[3] / 2;
  Tensor<T> out({xs[0], xs[1], oh, ow});
  std::vector<std::size_t> argmax(out.numel());
  std::size_t o = 0;
  for (int n = 0; n < xs[0]; ++n) {
    for (int c = 0; c < xs[1]; ++c) {
      for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j, ++o) {
          std::size_t best = x->value.offset(n, c, 2 * i, 2 * j);
          for (int a = 0; a < 2; ++a) {
            for (int bb = 0; bb < 2; ++bb) {
              const std::size_t idx = x->value.offset(n, c, 2 * i + a, 2 * j + bb);
              if (x->value[idx] > x->value[best]) best = idx;
            }
          }
          argmax[o] = best;
          out[o] = x->value[best];
        }
      }
    }
  }
  auto y = make_output(std::move(out), ctx.records({&x}));
  if (!y->requires_grad) return y;
  std::weak_ptr<Node<T>> wy = y;
  ctx.tape->record([x, wy, argmax = std::move(argmax)]() {
    auto y = wy.lock();
    if (!y || !y->has_grad()) return;
    auto& dx = x->grad_buffer();
    for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += y->grad[i];
  });
  return y;
}

template <class T>
Var<T> relu(Context<T>& ctx, const Var<T>& x) {
  Tensor<T> out = x->value;
  for (auto& v : out.storage()) v = v > T(0) ? v : T(0);
  auto y = make_output(std::move(out), ctx.records({&x}));
  if (!y->requires_grad) return y;
  std::weak_ptr<Node<T>> wy = y;
  ctx.tape->record([x, wy]() {
    auto y = wy.lock();
    if (!y || !y->has_grad()) return;
    auto& dx = x->grad_buffer();
    for (std::size_t i = 0; i < dx.numel(); ++i) {
      if (x->value[i] > T(0)) dx[i] += y->grad[i];
    }
  });
  return y;
}

template <class T>
Var<T> sigmoid(Context<T>& ctx, const Var<T>& x) {
  Tensor<T> out = x->value;
  for (auto& v : out.storage()) v = T(1) / (T(1) + std::exp(-v));
  auto y = make_output(std::move(out), ctx.records({&x}));
  if (!y->requires_grad) return y;
  std::weak_ptr<Node<T>> wy = y;
  ctx.tape->record([x, wy]() {
    auto y = wy.lock();
    if (!y || !y->has_grad()) return;
    auto& dx = x->grad_buffer();
    for (std::size_t i = 0; i < dx.numel(); ++i) {
      const T s = y->value[i];
      dx[i] += y->grad[i] * s * (T(1) - s);
    }
  });
  return y;
}

template <class T>
Var<T> add(Context<T>& ctx, const Var<T>& a, const Var<T>& b) {
  if (!a->value.same_shape(b->value)) throw InvalidInput("add: shape mismatch");
  Tensor<T> out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b->value[i];
  auto y = make_output(std::move(out), ctx.records({&a, &b}));
  if (!y->requires_grad) return y;
  std::weak_ptr<Node<T>> wy = y;
  ctx.tape->record([a, b, wy]() {
    auto y = wy.lock();
    if (!y || !y->has_grad()) return;
    for (const auto* v : {&a, &b}) {
      if (!(*v)->requires_grad) continue;
      auto& d = (*v)->grad_buffer();
      for (std::size_t i = 0; i < d.numel(); ++i) d[i] += y->grad[i];
    }
  });
  return y;
}

template <class T>
Var<T> concat(Context<T>& ctx, const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw InvalidInput("concat: no inputs");
  const auto& s0 = parts.front()->value.shape();
  require_rank4(s0, "concat");
  int channels = 0;
  bool requires_grad = false;
  for (const auto& p : parts) {
    const auto& s = p->value.shape();
    require_rank4(s, "concat");
    if (s[0] != s0[0] || s[2] != s0[2] || s[3] != s0[3]) throw InvalidInput("concat: N/H/W mismatch");
    channels += s[1];
    requires_grad = requires_grad || p->requires_grad;
  }
  const int batch = s0[0];
  const std::size_t plane = static_cast<std::size_t>(s0[2]) * s0[3];
  Tensor<T> out({batch, channels, s0[2], s0[3]});
  for (int n = 0; n < batch; ++n) {
    T* dst = out.data() + static_cast<std::size_t>(n) * channels * plane;
    for (const auto& p : parts) {
      const std::size_t len = static_cast<std::size_t>(p->value.c()) * plane;
      const T* src = p->value.data() + static_cast<std::size_t>(n) * len;
      std::copy(src, src + len, dst);
      dst += len;
    }
  }
  auto y = make_output(std::move(out), ctx.tape != nullptr && requires_grad);
  if (!y->requires_grad) return y;
  std::weak_ptr<Node<T>> wy = y;
  ctx.tape->record([parts, wy, batch, channels, plane]() {
    auto y = wy.lock();
    if (!y || !y->has_grad()) return;
    for (int n = 0; n < batch; ++n) {
      const T* src = y->grad.data() + static_cast<std::size_t>(n) * channels * plane;
      for (const auto& p : parts) {
        const std::size_t len = static_cast<std::size_t>(p->value.c()) * plane;
        if (p->requires_grad) {
          T* dst = p->grad_buffer().data() + static_cast<std::size_t>(n) * len;
          for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
        }
        src += len;
      }
    }
  });
  return y;
}

template <class T>
Var<T> batchnorm(Context<T>& ctx, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, BatchNormState<T>& state) {
  const auto& xs = x->value.shape();
  require_rank4(xs, "batchnorm");
  const int batch = xs[0];
  const int channels = xs[1];
  if (gamma->value.numel() != static_cast<std::size_t>(channels) || beta->value.numel() != static_cast<std::size_t>(channels) ||
      state.mean.numel() != static_cast<std::size_t>(channels)) {
    throw InvalidInput("batchnorm: channel mismatch");
  }
  const std::size_t plane = static_cast<std::size_t>(xs[2]) * xs[3];
  const double count = static_cast<double>(batch) * static_cast<double>(plane);

  std::vector<T> mean(channels), inv_std(channels);
  for (int c = 0; c < channels; ++c) {
    if (ctx.training) {
      double s = 0.0;
      for (int n = 0; n < batch; ++n) {
        const T* p = x->value.data() + x->value.offset(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
      }
      const double m = s / count;
      double v = 0.0;
      for (int n = 0; n < batch; ++n) {
        const T* p = x->value.data() + x->value.offset(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) v += (p[i] - m) * (p[i] - m);
      }
      v /= count;
      mean[c] = static_cast<T>(m);
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(v + static_cast<double>(state.eps)));
      state.mean[c] = (T(1) - state.momentum) * state.mean[c] + state.momentum * static_cast<T>(m);
      state.var[c] = (T(1) - state.momentum) * state.var[c] + state.momentum * static_cast<T>(v);
    } else {
      mean[c] = state.mean[c];
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(state.var[c]) + static_cast<double>(state.eps)));
    }
  }

  Tensor<T> xhat(xs);
  Tensor<T> out(xs);
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      const std::size_t o = x->value.offset(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) {
        const T h = (x->value[o + i] - mean[c]) * inv_std[c];
        xhat[o + i] = h;
        out[o + i] = gamma->value[c] * h + beta->value[c];
      }
    }
  }

  auto y = make_output(std::move(out), ctx.records({&x, &gamma, &beta}));
  if (!y->requires_grad) return y;
  std::weak_ptr<Node<T>> wy = y;
  const bool training = ctx.training;
  ctx.tape->record([x, gamma, beta, wy, xhat = std::move(xhat), inv_std = std::move(inv_std), batch, channels, plane, count,
                    training]() {
    auto y = wy.lock();
    if (!y || !y->has_grad()) return;
    for (int c = 0; c < channels; ++c) {
      double sum_dy = 0.0;
      double sum_dy_xhat = 0.0;
      for (int n = 0; n < batch; ++n) {
        const std::size_t o = y->value.offset(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) {
          sum_dy += y->grad[o + i];
          sum_dy_xhat += y->grad[o + i] * xhat[o + i];
        }
      }
      if (gamma->requires_grad) gamma->grad_buffer()[c] += static_cast<T>(sum_dy_xhat);
      if (beta->requires_grad) beta->grad_buffer()[c] += static_cast<T>(sum_dy);
      if (!x->requires_grad) continue;
      auto& dx = x->grad_buffer();
      const T g = gamma->value[c];
      for (int n = 0; n < batch; ++n) {
        const std::size_t o = y->value.offset(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) {
          if (training) {
            const double v = (y->grad[o + i] - sum_dy / count - xhat[o + i] * sum_dy_xhat / count);
            dx[o + i] += static_cast<T>(g * inv_std[c] * v);
          } else {
            dx[o + i] += g * inv_std[c] * y->grad[o + i];
          }
        }
      }
    }
  });
  return y;
}

template <class T>
Var<T> weighted_sum(Context<T>& ctx, const Var<T>& x, const Tensor<T>& weights) {
  if (weights.numel() != x->value.numel()) throw InvalidInput("weighted_sum: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < weights.numel(); ++i) s += static_cast<double>(x->value[i]) * weights[i];
  auto y = make_output(Tensor<T>({1}, static_cast<T>(s)), ctx.records({&x}));
  if (!y->requires_grad) return y;
  std::weak_ptr<Node<T>> wy = y;
  ctx.tape->record([x, wy, weights]() {
    auto y = wy.lock();
    if (!y || !y->has_grad()) return;
    auto& dx = x->grad_buffer();
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += y->grad[0] * weights[i];
  });
  return y;
}

#define NUCLICK_INSTANTIATE_OPS(T)                                                                            \
  template Var<T> conv2d(Context<T>&, const Var<T>&, const Var<T>&, const Var<T>&, int, int);                 \
  template Var<T> up2(Context<T>&, const Var<T>&, const Var<T>&, const Var<T>&);                              \
  template Var<T> down2(Context<T>&, const Var<T>&);                                                          \
  template Var<T> relu(Context<T>&, const Var<T>&);                                                           \
  template Var<T> sigmoid(Context<T>&, const Var<T>&);                                                        \
  template Var<T> add(Context<T>&, const Var<T>&, const Var<T>&);                                             \
  template Var<T> concat(Context<T>&, const std::vector<Var<T>>&);                                            \
  template Var<T> batchnorm(Context<T>&, const Var<T>&, const Var<T>&, const Var<T>&, BatchNormState<T>&);    \
  template Var<T> weighted_sum(Context<T>&, const Var<T>&, const Tensor<T>&);

NUCLICK_INSTANTIATE_OPS(float)
NUCLICK_INSTANTIATE_OPS(double)

}  // namespace nuclick::nn
