#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "skillfuse/common.hpp"

namespace skillfuse {

// Cubic smoothing spline evaluated at its knots (Reinsch form).
//
// Minimizes  p * sum (y_i - g(t_i))^2 + (1 - p) * integral g''(t)^2 dt
// over natural cubic splines g with knots at t. p = 1 interpolates, p -> 0
// tends to the least-squares line. Knots must be strictly increasing.
inline std::vector<double> smoothing_spline(std::span<const double> t, std::span<const double> y, double p) {
  const std::size_t n = t.size();
  if (y.size() != n) throw std::invalid_argument("smoothing_spline: size mismatch");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("smoothing_spline: p must be in (0, 1]");
  if (n < 3 || p == 1.0) return {y.begin(), y.end()};

  const double alpha = (1.0 - p) / p;
  const std::size_t m = n - 2;
  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = t[i + 1] - t[i];
    if (!(h[i] > 0)) throw std::invalid_argument("smoothing_spline: knots must be strictly increasing");
  }

  // Column j of Q has entries q0, q1, q2 at rows j, j+1, j+2.
  std::vector<double> q0(m), q1(m), q2(m);
  for (std::size_t j = 0; j < m; ++j) {
    q0[j] = 1.0 / h[j];
    q2[j] = 1.0 / h[j + 1];
    q1[j] = -q0[j] - q2[j];
  }

  // Symmetric pentadiagonal A = R + alpha Q'Q: diagonal d, first and second sub-diagonals e, f.
  std::vector<double> d(m), e(m, 0.0), f(m, 0.0), rhs(m);
  for (std::size_t j = 0; j < m; ++j) {
    d[j] = (h[j] + h[j + 1]) / 3.0 + alpha * (q0[j] * q0[j] + q1[j] * q1[j] + q2[j] * q2[j]);
    if (j >= 1) e[j] = h[j] / 6.0 + alpha * (q0[j] * q1[j - 1] + q1[j] * q2[j - 1]);
    if (j >= 2) f[j] = alpha * q0[j] * q2[j - 2];
    rhs[j] = q0[j] * y[j] + q1[j] * y[j + 1] + q2[j] * y[j + 2];
  }

  // Banded Cholesky, A = L L'.
  std::vector<double> l0(m), l1(m, 0.0), l2(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (i >= 2) l2[i] = f[i] / l0[i - 2];
    if (i >= 1) l1[i] = (e[i] - (i >= 2 ? l2[i] * l1[i - 1] : 0.0)) / l0[i - 1];
    const double piv = d[i] - l1[i] * l1[i] - l2[i] * l2[i];
    if (!(piv > 0)) throw numeric_error("smoothing_spline: system not positive definite");
    l0[i] = std::sqrt(piv);
  }
  std::vector<double> gamma(m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = rhs[i];
    if (i >= 1) s -= l1[i] * gamma[i - 1];
    if (i >= 2) s -= l2[i] * gamma[i - 2];
    gamma[i] = s / l0[i];
  }
  for (std::size_t k = m; k-- > 0;) {
    double s = gamma[k];
    if (k + 1 < m) s -= l1[k + 1] * gamma[k + 1];
    if (k + 2 < m) s -= l2[k + 2] * gamma[k + 2];
    gamma[k] = s / l0[k];
  }

  std::vector<double> g(y.begin(), y.end());
  for (std::size_t j = 0; j < m; ++j) {
    g[j] -= alpha * q0[j] * gamma[j];
    g[j + 1] -= alpha * q1[j] * gamma[j];
    g[j + 2] -= alpha * q2[j] * gamma[j];
  }
  return g;
}

}  // namespace skillfuse
