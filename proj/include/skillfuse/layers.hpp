#pragma once

// Differentiable building blocks of the skill network. Every forward function
// has a matching backward that accumulates parameter gradients into caller
// storage and returns the gradient with respect to its input.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "skillfuse/common.hpp"

namespace skillfuse::layers {

// Same-padded 1D convolution over time.
// x: T x Cin, w: [Cout][K][Cin], b: [Cout] -> T x Cout.
inline Matrix conv1d_forward(const Matrix& x, std::span<const double> w, std::span<const double> b,
                             std::size_t out_ch, std::size_t kernel) {
  const std::size_t T = x.rows(), in_ch = x.cols();
  if (w.size() != out_ch * kernel * in_ch || b.size() != out_ch)
    throw std::invalid_argument("conv1d: parameter shape mismatch");
  const auto pad = static_cast<std::ptrdiff_t>(kernel / 2);
  Matrix y(T, out_ch);
  for (std::size_t t = 0; t < T; ++t) {
    auto yr = y.row(t);
    for (std::size_t o = 0; o < out_ch; ++o) yr[o] = b[o];
    for (std::size_t j = 0; j < kernel; ++j) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(j) - pad;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(T)) continue;
      const auto xr = x.row(static_cast<std::size_t>(src));
      for (std::size_t o = 0; o < out_ch; ++o) {
        const double* wr = w.data() + (o * kernel + j) * in_ch;
        double s = 0.0;
        for (std::size_t i = 0; i < in_ch; ++i) s += wr[i] * xr[i];
        yr[o] += s;
      }
    }
  }
  return y;
}

inline Matrix conv1d_backward(const Matrix& x, std::span<const double> w, const Matrix& dy, std::size_t kernel,
                              std::span<double> dw, std::span<double> db) {
  const std::size_t T = x.rows(), in_ch = x.cols(), out_ch = dy.cols();
  const auto pad = static_cast<std::ptrdiff_t>(kernel / 2);
  Matrix dx(T, in_ch);
  for (std::size_t t = 0; t < T; ++t) {
    const auto dyr = dy.row(t);
    for (std::size_t o = 0; o < out_ch; ++o) db[o] += dyr[o];
    for (std::size_t j = 0; j < kernel; ++j) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(j) - pad;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(T)) continue;
      const auto xr = x.row(static_cast<std::size_t>(src));
      auto dxr = dx.row(static_cast<std::size_t>(src));
      for (std::size_t o = 0; o < out_ch; ++o) {
        const double g = dyr[o];
        if (g == 0.0) continue;
        const std::size_t base = (o * kernel + j) * in_ch;
        for (std::size_t i = 0; i < in_ch; ++i) {
          dw[base + i] += g * xr[i];
          dxr[i] += g * w[base + i];
        }
      }
    }
  }
  return dx;
}

inline Matrix relu(const Matrix& x) {
  Matrix y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

// dy masked by the sign of the pre-activation.
inline Matrix relu_backward(const Matrix& pre, const Matrix& dy) {
  Matrix dx = dy;
  auto p = pre.values();
  auto d = dx.values();
  for (std::size_t i = 0; i < d.size(); ++i)
    if (!(p[i] > 0.0)) d[i] = 0.0;
  return dx;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Mean over time: T x C -> C.
inline std::vector<double> gap_forward(const Matrix& x) {
  std::vector<double> v(x.cols(), 0.0);
  for (std::size_t t = 0; t < x.rows(); ++t)
    for (std::size_t c = 0; c < x.cols(); ++c) v[c] += x(t, c);
  for (double& s : v) s /= static_cast<double>(x.rows());
  return v;
}

inline Matrix gap_backward(std::span<const double> dv, std::size_t T) {
  Matrix dx(T, dv.size());
  const double inv = 1.0 / static_cast<double>(T);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t c = 0; c < dv.size(); ++c) dx(t, c) = dv[c] * inv;
  return dx;
}

// y = W v + b with W: [out][in].
inline std::vector<double> dense_forward(std::span<const double> v, std::span<const double> w,
                                         std::span<const double> b) {
  const std::size_t in = v.size(), out = b.size();
  if (w.size() != in * out) throw std::invalid_argument("dense: parameter shape mismatch");
  std::vector<double> y(b.begin(), b.end());
  for (std::size_t o = 0; o < out; ++o)
    for (std::size_t i = 0; i < in; ++i) y[o] += w[o * in + i] * v[i];
  return y;
}

inline std::vector<double> dense_backward(std::span<const double> v, std::span<const double> w,
                                          std::span<const double> dy, std::span<double> dw, std::span<double> db) {
  const std::size_t in = v.size(), out = dy.size();
  std::vector<double> dv(in, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    db[o] += dy[o];
    for (std::size_t i = 0; i < in; ++i) {
      dw[o * in + i] += dy[o] * v[i];
      dv[i] += dy[o] * w[o * in + i];
    }
  }
  return dv;
}

// Parameters of the concurrent spatial and channel squeeze-and-excitation block.
struct ScseParams {
  std::span<const double> fc1_w;      // [R][C]
  std::span<const double> fc1_b;      // [R]
  std::span<const double> fc2_w;      // [C][R]
  std::span<const double> fc2_b;      // [C]
  std::span<const double> spatial_w;  // [C]
  std::span<const double> spatial_b;  // [1]
};

struct ScseGrads {
  std::span<double> fc1_w, fc1_b, fc2_w, fc2_b, spatial_w, spatial_b;
};

struct ScseCache {
  std::vector<double> squeeze;      // C, temporal mean
  std::vector<double> hidden_pre;   // R
  std::vector<double> hidden;       // R
  std::vector<double> channel_gate; // C
  std::vector<double> spatial_gate; // T
};

// out = f * channel_gate + f * spatial_gate.
inline Matrix scse_forward(const Matrix& f, const ScseParams& p, ScseCache* cache = nullptr) {
  const std::size_t T = f.rows(), C = f.cols();
  const std::size_t R = p.fc1_b.size();
  if (p.fc1_w.size() != R * C || p.fc2_w.size() != C * R || p.fc2_b.size() != C || p.spatial_w.size() != C ||
      p.spatial_b.size() != 1)
    throw std::invalid_argument("scse: parameter shape mismatch");

  const auto z = gap_forward(f);
  const auto hpre = dense_forward(z, p.fc1_w, p.fc1_b);
  std::vector<double> h(R);
  for (std::size_t r = 0; r < R; ++r) h[r] = hpre[r] > 0 ? hpre[r] : 0.0;
  auto g = dense_forward(h, p.fc2_w, p.fc2_b);
  for (double& v : g) v = sigmoid(v);

  std::vector<double> q(T);
  Matrix out(T, C);
  for (std::size_t t = 0; t < T; ++t) {
    const auto fr = f.row(t);
    double s = p.spatial_b[0];
    for (std::size_t c = 0; c < C; ++c) s += p.spatial_w[c] * fr[c];
    q[t] = sigmoid(s);
    auto orow = out.row(t);
    for (std::size_t c = 0; c < C; ++c) orow[c] = fr[c] * (g[c] + q[t]);
  }
  if (cache) *cache = {z, hpre, h, g, q};
  return out;
}

inline Matrix scse_backward(const Matrix& f, const ScseParams& p, const ScseCache& cache, const Matrix& dout,
                            const ScseGrads& grads) {
  const std::size_t T = f.rows(), C = f.cols(), R = cache.hidden.size();
  const auto& g = cache.channel_gate;
  const auto& q = cache.spatial_gate;

  Matrix df(T, C);
  std::vector<double> dg(C, 0.0), dq_pre(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const auto fr = f.row(t);
    const auto dr = dout.row(t);
    auto dfr = df.row(t);
    double dq = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      dfr[c] = dr[c] * (g[c] + q[t]);
      dg[c] += dr[c] * fr[c];
      dq += dr[c] * fr[c];
    }
    dq_pre[t] = dq * q[t] * (1.0 - q[t]);
  }

  // spatial path
  for (std::size_t t = 0; t < T; ++t) {
    const auto fr = f.row(t);
    auto dfr = df.row(t);
    grads.spatial_b[0] += dq_pre[t];
    for (std::size_t c = 0; c < C; ++c) {
      grads.spatial_w[c] += dq_pre[t] * fr[c];
      dfr[c] += dq_pre[t] * p.spatial_w[c];
    }
  }

  // channel path
  std::vector<double> dg_pre(C);
  for (std::size_t c = 0; c < C; ++c) dg_pre[c] = dg[c] * g[c] * (1.0 - g[c]);
  auto dh = dense_backward(cache.hidden, p.fc2_w, dg_pre, grads.fc2_w, grads.fc2_b);
  for (std::size_t r = 0; r < R; ++r)
    if (!(cache.hidden_pre[r] > 0)) dh[r] = 0.0;
  const auto dz = dense_backward(cache.squeeze, p.fc1_w, dh, grads.fc1_w, grads.fc1_b);
  const double inv = 1.0 / static_cast<double>(T);
  for (std::size_t t = 0; t < T; ++t) {
    auto dfr = df.row(t);
    for (std::size_t c = 0; c < C; ++c) dfr[c] += dz[c] * inv;
  }
  return df;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : logits) m = std::max(m, v);
  std::vector<double> p(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    s += p[i];
  }
  for (double& v : p) v /= s;
  return p;
}

// Cross-entropy of softmax(logits) against `label`; writes dL/dlogits.
inline double softmax_cross_entropy(std::span<const double> logits, std::size_t label, std::span<double> dlogits) {
  const auto p = softmax(logits);
  for (std::size_t i = 0; i < p.size(); ++i) dlogits[i] = p[i] - (i == label ? 1.0 : 0.0);
  double m = -std::numeric_limits<double>::infinity();
  for (double v : logits) m = std::max(m, v);
  double s = 0.0;
  for (double v : logits) s += std::exp(v - m);
  return -(logits[label] - m - std::log(s));
}

inline double squared_error(double y, double target, double& dy) {
  dy = 2.0 * (y - target);
  return (y - target) * (y - target);
}

}  // namespace skillfuse::layers
