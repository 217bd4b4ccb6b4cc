#pragma once

// Isolated layer gradient checks against central finite differences and the
// CAM logit identity, shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <tuple>

#include "fd_oracle.hpp"
#include "skillfuse/explain.hpp"
#include "skillfuse/nnet.hpp"

namespace checks {

using namespace skillfuse;

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.uniform(-scale, scale);
  return m;
}

inline std::vector<double> random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

inline Matrix from_flat(std::span<const double> v, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  std::copy(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(r * c), m.values().begin());
  return m;
}

inline double dot(const Matrix& a, const Matrix& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  return s;
}

inline double conv1d_error() {
  Rng rng(1);
  const std::size_t T = 9, Ci = 3, Co = 4, K = 3;
  const Matrix proj = random_matrix(T, Co, rng);
  std::vector<double> theta = random_vector(T * Ci + Co * K * Ci + Co, rng);
  auto split = [&](const std::vector<double>& th) {
    std::span<const double> s(th);
    return std::tuple{from_flat(s, T, Ci), s.subspan(T * Ci, Co * K * Ci), s.subspan(T * Ci + Co * K * Ci, Co)};
  };
  auto f = [&](const std::vector<double>& th) {
    auto [x, w, b] = split(th);
    return dot(layers::conv1d_forward(x, w, b, Co, K), proj);
  };
  auto [x, w, b] = split(theta);
  std::vector<double> dw(w.size(), 0.0), db(b.size(), 0.0);
  const Matrix dx = layers::conv1d_backward(x, w, proj, K, dw, db);
  std::vector<double> ad(dx.values().begin(), dx.values().end());
  ad.insert(ad.end(), dw.begin(), dw.end());
  ad.insert(ad.end(), db.begin(), db.end());
  return fd::max_relative_error(ad, fd::gradient(f, theta));
}

inline double scse_error() {
  Rng rng(2);
  const std::size_t T = 7, C = 6, R = 2;
  const Matrix proj = random_matrix(T, C, rng);
  const std::size_t n_par = R * C + R + C * R + C + C + 1;
  std::vector<double> theta = random_vector(T * C + n_par, rng);
  auto params = [&](std::span<const double> s) {
    std::size_t o = T * C;
    auto take = [&](std::size_t n) {
      auto v = s.subspan(o, n);
      o += n;
      return v;
    };
    layers::ScseParams p;
    p.fc1_w = take(R * C);
    p.fc1_b = take(R);
    p.fc2_w = take(C * R);
    p.fc2_b = take(C);
    p.spatial_w = take(C);
    p.spatial_b = take(1);
    return p;
  };
  auto f = [&](const std::vector<double>& th) {
    return dot(layers::scse_forward(from_flat(th, T, C), params(th)), proj);
  };
  const Matrix x = from_flat(theta, T, C);
  layers::ScseCache cache;
  layers::scse_forward(x, params(theta), &cache);
  std::vector<double> g(theta.size(), 0.0);
  std::span<double> gs(g);
  std::size_t o = T * C;
  auto take = [&](std::size_t n) {
    auto v = gs.subspan(o, n);
    o += n;
    return v;
  };
  layers::ScseGrads grads;
  grads.fc1_w = take(R * C);
  grads.fc1_b = take(R);
  grads.fc2_w = take(C * R);
  grads.fc2_b = take(C);
  grads.spatial_w = take(C);
  grads.spatial_b = take(1);
  const Matrix dx = layers::scse_backward(x, params(theta), cache, proj, grads);
  std::copy(dx.values().begin(), dx.values().end(), g.begin());
  return fd::max_relative_error(g, fd::gradient(f, theta));
}

inline double gap_dense_softmax_error() {
  Rng rng(3);
  const std::size_t T = 5, C = 4, K = 3;
  std::vector<double> theta = random_vector(T * C + K * C + K, rng);
  auto f = [&](const std::vector<double>& th) {
    std::span<const double> s(th);
    const auto v = layers::gap_forward(from_flat(s, T, C));
    const auto y = layers::dense_forward(v, s.subspan(T * C, K * C), s.subspan(T * C + K * C, K));
    std::vector<double> d(K);
    return layers::softmax_cross_entropy(y, 1, d);
  };
  std::span<const double> s(theta);
  const Matrix x = from_flat(s, T, C);
  const auto v = layers::gap_forward(x);
  const auto y = layers::dense_forward(v, s.subspan(T * C, K * C), s.subspan(T * C + K * C, K));
  std::vector<double> dy(K);
  layers::softmax_cross_entropy(y, 1, dy);
  std::vector<double> g(theta.size(), 0.0);
  std::span<double> gs(g);
  const auto dv = layers::dense_backward(v, s.subspan(T * C, K * C), dy, gs.subspan(T * C, K * C),
                                         gs.subspan(T * C + K * C, K));
  const Matrix dx = layers::gap_backward(dv, T);
  std::copy(dx.values().begin(), dx.values().end(), g.begin());
  return fd::max_relative_error(g, fd::gradient(f, theta));
}

inline double dense_squared_error() {
  Rng rng(4);
  const std::size_t I = 6;
  std::vector<double> theta = random_vector(I + I + 1, rng);
  const double target = 0.3;
  auto f = [&](const std::vector<double>& th) {
    std::span<const double> s(th);
    const auto y = layers::dense_forward(s.subspan(0, I), s.subspan(I, I), s.subspan(2 * I, 1));
    double d;
    return layers::squared_error(y[0], target, d);
  };
  std::span<const double> s(theta);
  const auto y = layers::dense_forward(s.subspan(0, I), s.subspan(I, I), s.subspan(2 * I, 1));
  double dy;
  layers::squared_error(y[0], target, dy);
  std::vector<double> g(theta.size(), 0.0);
  std::span<double> gs(g);
  const std::vector<double> dys{dy};
  const auto dv = layers::dense_backward(s.subspan(0, I), s.subspan(I, I), dys, gs.subspan(I, I), gs.subspan(2 * I, 1));
  std::copy(dv.begin(), dv.end(), g.begin());
  return fd::max_relative_error(g, fd::gradient(f, theta));
}

// Largest |GAP(CAM_c) + b_c - logit_c| over every output of a model on x.
inline double cam_identity_error(const TrainedModel& m, const Matrix& x) {
  const auto out = forward(m, x).outputs;
  const auto bias = make_layout(m.config).view(std::span<const double>(m.parameters), "head.b");
  double worst = 0;
  for (std::size_t c = 0; c < m.config.outputs(); ++c) worst = std::max(worst, std::abs(mean(compute_cam(m, x, c)) + bias[c] - out[c]));
  return worst;
}

}  // namespace checks
