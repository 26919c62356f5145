#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "smgen/errors.hpp"
#include "smgen/rng.hpp"

namespace smgen::nn {

// Dense 64-bit float tensor with an optional same-shape gradient buffer.
// Values are immutable by convention during a forward pass; gradients
// accumulate until zero_grad().
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> v;
  std::vector<double> g;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    v.assign(numel(), 0.0);
  }

  std::size_t numel() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }

  void ensure_grad() {
    if (g.size() != v.size()) g.assign(v.size(), 0.0);
  }
  void zero_grad() { g.assign(v.size(), 0.0); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline std::string shape_str(const Tensor& t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.shape.size(); ++i)
    s += (i ? "," : "") + std::to_string(t.shape[i]);
  return s + ")";
}

inline void check_finite(const Tensor& t, const char* where) {
#ifndef NDEBUG
  for (double x : t.v)
    assert(std::isfinite(x) && where);
#else
  (void)t;
  (void)where;
#endif
}

inline void xavier_init(Tensor& t, std::size_t fan_in, std::size_t fan_out,
                        Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& x : t.v) x = (2.0 * rng.uniform() - 1.0) * limit;
}

namespace detail {

struct ConvDims {
  std::size_t n, c, h, w;
};

// Accepts {C,H,W} or {N,C,H,W}.
inline ConvDims conv_dims(const Tensor& t, const char* who) {
  if (t.shape.size() == 3) return {1, t.shape[0], t.shape[1], t.shape[2]};
  if (t.shape.size() == 4) return {t.shape[0], t.shape[1], t.shape[2], t.shape[3]};
  throw ShapeError(std::string(who) + ": expected 3D or 4D input, got " +
                   shape_str(t));
}

inline std::vector<std::size_t> like_input(const Tensor& x, std::size_t n,
                                           std::size_t c, std::size_t h,
                                           std::size_t w) {
  if (x.shape.size() == 3) return {c, h, w};
  return {n, c, h, w};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// conv2d: cross-correlation, kernels {O, C, kh, kw}, H' = (H+2p-kh)/s + 1.

inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b,
                     std::size_t stride = 1, std::size_t pad = 0) {
  const auto d = detail::conv_dims(x, "conv2d");
  if (w.shape.size() != 4 || w.shape[1] != d.c)
    throw ShapeError("conv2d: kernel " + shape_str(w) + " does not match input " +
                     shape_str(x));
  const std::size_t o_ch = w.shape[0], kh = w.shape[2], kw = w.shape[3];
  if (b.numel() != o_ch) throw ShapeError("conv2d: bias size mismatch");
  if (d.h + 2 * pad < kh || d.w + 2 * pad < kw)
    throw ShapeError("conv2d: kernel " + shape_str(w) + " larger than padded input " +
                     shape_str(x));
  const std::size_t oh = (d.h + 2 * pad - kh) / stride + 1;
  const std::size_t ow = (d.w + 2 * pad - kw) / stride + 1;
  Tensor y(detail::like_input(x, d.n, o_ch, oh, ow));
  for (std::size_t n = 0; n < d.n; ++n) {
    const double* xin = x.v.data() + n * d.c * d.h * d.w;
    double* yout = y.v.data() + n * o_ch * oh * ow;
    for (std::size_t o = 0; o < o_ch; ++o) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double acc = b.v[o];
          for (std::size_t c = 0; c < d.c; ++c) {
            const double* xc = xin + c * d.h * d.w;
            const double* wc = w.v.data() + (o * d.c + c) * kh * kw;
            for (std::size_t ky = 0; ky < kh; ++ky) {
              const long long iy = static_cast<long long>(oy * stride + ky) -
                                   static_cast<long long>(pad);
              if (iy < 0 || iy >= static_cast<long long>(d.h)) continue;
              for (std::size_t kx = 0; kx < kw; ++kx) {
                const long long ix = static_cast<long long>(ox * stride + kx) -
                                     static_cast<long long>(pad);
                if (ix < 0 || ix >= static_cast<long long>(d.w)) continue;
                acc += xc[iy * static_cast<long long>(d.w) + ix] * wc[ky * kw + kx];
              }
            }
          }
          yout[(o * oh + oy) * ow + ox] = acc;
        }
      }
    }
  }
  return y;
}

// Accumulates into w.g / b.g and returns dx.
inline Tensor conv2d_backward(const Tensor& x, Tensor& w, Tensor& b,
                              const Tensor& dy, std::size_t stride = 1,
                              std::size_t pad = 0) {
  const auto d = detail::conv_dims(x, "conv2d_backward");
  const std::size_t o_ch = w.shape[0], kh = w.shape[2], kw = w.shape[3];
  const auto dd = detail::conv_dims(dy, "conv2d_backward(dy)");
  const std::size_t oh = dd.h, ow = dd.w;
  w.ensure_grad();
  b.ensure_grad();
  Tensor dx(detail::like_input(x, d.n, d.c, d.h, d.w));
  for (std::size_t n = 0; n < d.n; ++n) {
    const double* xin = x.v.data() + n * d.c * d.h * d.w;
    const double* dyo = dy.v.data() + n * o_ch * oh * ow;
    double* dxo = dx.v.data() + n * d.c * d.h * d.w;
    for (std::size_t o = 0; o < o_ch; ++o) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double gy = dyo[(o * oh + oy) * ow + ox];
          if (gy == 0.0) continue;
          b.g[o] += gy;
          for (std::size_t c = 0; c < d.c; ++c) {
            const double* xc = xin + c * d.h * d.w;
            double* dxc = dxo + c * d.h * d.w;
            const double* wc = w.v.data() + (o * d.c + c) * kh * kw;
            double* dwc = w.g.data() + (o * d.c + c) * kh * kw;
            for (std::size_t ky = 0; ky < kh; ++ky) {
              const long long iy = static_cast<long long>(oy * stride + ky) -
                                   static_cast<long long>(pad);
              if (iy < 0 || iy >= static_cast<long long>(d.h)) continue;
              for (std::size_t kx = 0; kx < kw; ++kx) {
                const long long ix = static_cast<long long>(ox * stride + kx) -
                                     static_cast<long long>(pad);
                if (ix < 0 || ix >= static_cast<long long>(d.w)) continue;
                const std::size_t xi = iy * static_cast<long long>(d.w) + ix;
                dwc[ky * kw + kx] += xc[xi] * gy;
                dxc[xi] += wc[ky * kw + kx] * gy;
              }
            }
          }
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// conv_transpose2d: exact adjoint of conv2d. Kernels {I, O, kh, kw}; an input
// with I channels scatters into O output channels,
// H_out = (H-1)*stride - 2*pad + kh + output_pad.

inline Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b,
                               std::size_t stride = 1, std::size_t pad = 0,
                               std::size_t output_pad_h = 0,
                               std::size_t output_pad_w = 0) {
  const auto d = detail::conv_dims(x, "conv_transpose2d");
  if (w.shape.size() != 4 || w.shape[0] != d.c)
    throw ShapeError("conv_transpose2d: kernel " + shape_str(w) +
                     " does not match input " + shape_str(x));
  const std::size_t o_ch = w.shape[1], kh = w.shape[2], kw = w.shape[3];
  if (b.numel() != o_ch) throw ShapeError("conv_transpose2d: bias size mismatch");
  const long long ohs = static_cast<long long>((d.h - 1) * stride + kh + output_pad_h) -
                        2 * static_cast<long long>(pad);
  const long long ows = static_cast<long long>((d.w - 1) * stride + kw + output_pad_w) -
                        2 * static_cast<long long>(pad);
  if (ohs < 1 || ows < 1)
    throw ShapeError("conv_transpose2d: non-positive output size");
  const std::size_t oh = static_cast<std::size_t>(ohs);
  const std::size_t ow = static_cast<std::size_t>(ows);
  Tensor y(detail::like_input(x, d.n, o_ch, oh, ow));
  for (std::size_t n = 0; n < d.n; ++n) {
    const double* xin = x.v.data() + n * d.c * d.h * d.w;
    double* yout = y.v.data() + n * o_ch * oh * ow;
    for (std::size_t o = 0; o < o_ch; ++o)
      for (std::size_t t = 0; t < oh * ow; ++t) yout[o * oh * ow + t] = b.v[o];
    for (std::size_t c = 0; c < d.c; ++c) {
      const double* xc = xin + c * d.h * d.w;
      for (std::size_t iy = 0; iy < d.h; ++iy) {
        for (std::size_t ix = 0; ix < d.w; ++ix) {
          const double xv = xc[iy * d.w + ix];
          if (xv == 0.0) continue;
          for (std::size_t o = 0; o < o_ch; ++o) {
            const double* wc = w.v.data() + (c * o_ch + o) * kh * kw;
            double* yo = yout + o * oh * ow;
            for (std::size_t ky = 0; ky < kh; ++ky) {
              const long long oy = static_cast<long long>(iy * stride + ky) -
                                   static_cast<long long>(pad);
              if (oy < 0 || oy >= static_cast<long long>(oh)) continue;
              for (std::size_t kx = 0; kx < kw; ++kx) {
                const long long oxp = static_cast<long long>(ix * stride + kx) -
                                      static_cast<long long>(pad);
                if (oxp < 0 || oxp >= static_cast<long long>(ow)) continue;
                yo[oy * static_cast<long long>(ow) + oxp] += xv * wc[ky * kw + kx];
              }
            }
          }
        }
      }
    }
  }
  return y;
}

inline Tensor conv_transpose2d_backward(const Tensor& x, Tensor& w, Tensor& b,
                                        const Tensor& dy, std::size_t stride = 1,
                                        std::size_t pad = 0) {
  const auto d = detail::conv_dims(x, "conv_transpose2d_backward");
  const std::size_t o_ch = w.shape[1], kh = w.shape[2], kw = w.shape[3];
  const auto dd = detail::conv_dims(dy, "conv_transpose2d_backward(dy)");
  const std::size_t oh = dd.h, ow = dd.w;
  w.ensure_grad();
  b.ensure_grad();
  Tensor dx(detail::like_input(x, d.n, d.c, d.h, d.w));
  for (std::size_t n = 0; n < d.n; ++n) {
    const double* xin = x.v.data() + n * d.c * d.h * d.w;
    const double* dyo = dy.v.data() + n * o_ch * oh * ow;
    double* dxo = dx.v.data() + n * d.c * d.h * d.w;
    for (std::size_t o = 0; o < o_ch; ++o)
      for (std::size_t t = 0; t < oh * ow; ++t) b.g[o] += dyo[o * oh * ow + t];
    for (std::size_t c = 0; c < d.c; ++c) {
      const double* xc = xin + c * d.h * d.w;
      double* dxc = dxo + c * d.h * d.w;
      for (std::size_t iy = 0; iy < d.h; ++iy) {
        for (std::size_t ix = 0; ix < d.w; ++ix) {
          double acc = 0.0;
          for (std::size_t o = 0; o < o_ch; ++o) {
            const double* wc = w.v.data() + (c * o_ch + o) * kh * kw;
            double* dwc = w.g.data() + (c * o_ch + o) * kh * kw;
            const double* gyo = dyo + o * oh * ow;
            for (std::size_t ky = 0; ky < kh; ++ky) {
              const long long oy = static_cast<long long>(iy * stride + ky) -
                                   static_cast<long long>(pad);
              if (oy < 0 || oy >= static_cast<long long>(oh)) continue;
              for (std::size_t kx = 0; kx < kw; ++kx) {
                const long long oxp = static_cast<long long>(ix * stride + kx) -
                                      static_cast<long long>(pad);
                if (oxp < 0 || oxp >= static_cast<long long>(ow)) continue;
                const double gy = gyo[oy * static_cast<long long>(ow) + oxp];
                acc += wc[ky * kw + kx] * gy;
                dwc[ky * kw + kx] += xc[iy * d.w + ix] * gy;
              }
            }
          }
          dxc[iy * d.w + ix] = acc;
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// linear: rows x in -> rows x out, weights {in, out}, bias {out}.

inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.shape.size() != 2 || w.shape.size() != 2 || x.shape[1] != w.shape[0])
    throw ShapeError("linear: " + shape_str(x) + " x " + shape_str(w));
  const std::size_t rows = x.shape[0], in = x.shape[1], out = w.shape[1];
  Tensor y({rows, out});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b.v[o];
      for (std::size_t i = 0; i < in; ++i)
        acc += x.v[r * in + i] * w.v[i * out + o];
      y.v[r * out + o] = acc;
    }
  }
  return y;
}

inline Tensor linear_backward(const Tensor& x, Tensor& w, Tensor& b,
                              const Tensor& dy) {
  const std::size_t rows = x.shape[0], in = x.shape[1], out = w.shape[1];
  w.ensure_grad();
  b.ensure_grad();
  Tensor dx({rows, in});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      const double gy = dy.v[r * out + o];
      b.g[o] += gy;
      for (std::size_t i = 0; i < in; ++i) {
        w.g[i * out + o] += x.v[r * in + i] * gy;
        dx.v[r * in + i] += w.v[i * out + o] * gy;
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Elementwise activations. Derivative at the leaky-ReLU kink uses the x >= 0
// branch.

inline constexpr double kLeakySlope = 0.01;

inline double leaky_relu(double x) { return x >= 0.0 ? x : kLeakySlope * x; }
inline double leaky_relu_grad(double x) { return x >= 0.0 ? 1.0 : kLeakySlope; }

inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
}
inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf =
      std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double sigmoid_grad_from_y(double y) { return y * (1.0 - y); }

template <typename F>
inline Tensor map(const Tensor& x, F f) {
  Tensor y = x;
  for (auto& v : y.v) v = f(v);
  return y;
}

// dx = dy * f'(x)
template <typename G>
inline Tensor map_backward(const Tensor& x, const Tensor& dy, G g) {
  Tensor dx = x;
  for (std::size_t i = 0; i < x.v.size(); ++i) dx.v[i] = dy.v[i] * g(x.v[i]);
  return dx;
}

// ---------------------------------------------------------------------------
// softmax over a flat vector.

inline std::vector<double> softmax(const std::vector<double>& x) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  std::vector<double> y(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - mx);
    sum += y[i];
  }
  for (auto& v : y) v /= sum;
  return y;
}

inline std::vector<double> softmax_backward(const std::vector<double>& y,
                                            const std::vector<double>& dy) {
  double dot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * dy[i];
  std::vector<double> dx(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = y[i] * (dy[i] - dot);
  return dx;
}

inline double mse(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

// ---------------------------------------------------------------------------
// Adam with bias correction. Moment buffers are keyed by position in the
// parameter list, so the list order must stay stable across steps.

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long t = 0;
  std::vector<std::vector<double>> m, v;
};

inline void adam_step(std::vector<Tensor*>& params, AdamState& st) {
  if (st.m.empty()) {
    st.m.resize(params.size());
    st.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      st.m[i].assign(params[i]->v.size(), 0.0);
      st.v[i].assign(params[i]->v.size(), 0.0);
    }
  }
  ++st.t;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    p.ensure_grad();
    for (std::size_t j = 0; j < p.v.size(); ++j) {
      const double g = p.g[j];
      st.m[i][j] = st.beta1 * st.m[i][j] + (1.0 - st.beta1) * g;
      st.v[i][j] = st.beta2 * st.v[i][j] + (1.0 - st.beta2) * g * g;
      const double mhat = st.m[i][j] / bc1;
      const double vhat = st.v[i][j] / bc2;
      p.v[j] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

inline void zero_grads(std::vector<Tensor*>& params) {
  for (auto* p : params) p->zero_grad();
}

// ---------------------------------------------------------------------------
// Central finite differences against an analytic gradient; returns the worst
// relative error. f must be a pure scalar function of the flat input.

inline double grad_check(const std::function<double(const std::vector<double>&)>& f,
                         const std::vector<double>& x,
                         const std::vector<double>& analytic, double h = 1e-5) {
  if (x.size() != analytic.size())
    throw ShapeError("grad_check: gradient size mismatch");
  double worst = 0.0;
  std::vector<double> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    const double numeric = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
  }
  return worst;
}

}  // namespace smgen::nn
