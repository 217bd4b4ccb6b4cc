#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "skillfuse/common.hpp"

namespace skillfuse {

// One second-order section, a0 normalized to 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

// Cascade of second-order sections. Evaluated in transposed direct form II.
struct SosFilter {
  std::vector<Biquad> sections;

  [[nodiscard]] std::complex<double> response(double freq_hz, double fs_hz) const {
    const double w = 2.0 * std::numbers::pi * freq_hz / fs_hz;
    const std::complex<double> zi1 = std::polar(1.0, -w);
    const std::complex<double> zi2 = zi1 * zi1;
    std::complex<double> h = 1.0;
    for (const auto& s : sections) h *= (s.b0 + s.b1 * zi1 + s.b2 * zi2) / (1.0 + s.a1 * zi1 + s.a2 * zi2);
    return h;
  }

  [[nodiscard]] double magnitude(double freq_hz, double fs_hz) const { return std::abs(response(freq_hz, fs_hz)); }
};

namespace detail {

using cplx = std::complex<double>;

inline Biquad section_from_poles(cplx p1, cplx p2, double gain) {
  Biquad s;
  // zeros at z = +1 and z = -1
  s.b0 = gain;
  s.b1 = 0.0;
  s.b2 = -gain;
  s.a1 = -(p1 + p2).real();
  s.a2 = (p1 * p2).real();
  return s;
}

}  // namespace detail

// Digital Butterworth band-pass of prototype order `order` (2*order poles),
// designed by band transformation of the analog prototype and the bilinear
// transform with pre-warped band edges.
inline SosFilter butterworth_bandpass(int order, double low_hz, double high_hz, double fs_hz) {
  using detail::cplx;
  if (order < 1) throw std::invalid_argument("butterworth_bandpass: order must be >= 1");
  if (!(fs_hz > 0)) throw std::invalid_argument("butterworth_bandpass: sample rate must be positive");
  if (!(low_hz > 0 && low_hz < high_hz && high_hz < fs_hz / 2))
    throw std::invalid_argument("butterworth_bandpass: require 0 < low < high < fs/2");

  const double fs2 = 2.0 * fs_hz;
  const double wl = fs2 * std::tan(std::numbers::pi * low_hz / fs_hz);
  const double wh = fs2 * std::tan(std::numbers::pi * high_hz / fs_hz);
  const double bw = wh - wl;
  const double w0sq = wl * wh;

  std::vector<cplx> poles;
  poles.reserve(2 * order);
  for (int m = -order + 1; m < order; m += 2) {
    const cplx proto = -std::exp(cplx(0, std::numbers::pi * m / (2.0 * order)));
    const cplx scaled = proto * (bw / 2.0);
    const cplx root = std::sqrt(scaled * scaled - w0sq);
    poles.push_back(scaled + root);
    poles.push_back(scaled - root);
  }

  // Analog gain bw^N, N finite zeros at s=0 and N zeros at infinity.
  cplx gain = std::pow(bw, order);
  cplx num = 1.0, den = 1.0;
  for (int i = 0; i < order; ++i) num *= fs2;  // fs2 - 0 for each zero at s=0
  std::vector<cplx> zpoles;
  for (const auto& p : poles) {
    den *= fs2 - p;
    zpoles.push_back((fs2 + p) / (fs2 - p));
  }
  const double k = (gain * num / den).real();

  constexpr double tol = 1e-12;
  std::vector<cplx> upper, real;
  for (const auto& p : zpoles) {
    if (std::abs(p.imag()) <= tol * std::max(1.0, std::abs(p)))
      real.emplace_back(p.real(), 0.0);
    else if (p.imag() > 0)
      upper.push_back(p);
  }
  if (real.size() % 2 != 0) throw numeric_error("butterworth_bandpass: unpaired real pole");
  std::sort(real.begin(), real.end(), [](cplx a, cplx b) { return a.real() < b.real(); });

  SosFilter f;
  for (const auto& p : upper) f.sections.push_back(detail::section_from_poles(p, std::conj(p), 1.0));
  for (std::size_t i = 0; i + 1 < real.size(); i += 2)
    f.sections.push_back(detail::section_from_poles(real[i], real[i + 1], 1.0));
  if (f.sections.size() != static_cast<std::size_t>(order))
    throw numeric_error("butterworth_bandpass: pole pairing failed");
  f.sections.front().b0 *= k;
  f.sections.front().b2 *= k;
  return f;
}

// Single pass through the cascade. `x0` scales the step-response steady state
// used as initial condition (pass 0 to start from rest).
inline std::vector<double> sos_filter(const SosFilter& f, std::span<const double> x, double x0 = 0.0) {
  std::vector<double> y(x.begin(), x.end());
  double level = x0;
  for (const auto& s : f.sections) {
    const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    double z2 = (s.b2 - s.a2 * dc) * level;
    double z1 = (s.b1 - s.a1 * dc) * level + z2;
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
    level *= dc;
  }
  return y;
}

// Forward-backward (zero-phase) filtering with odd extension of `padlen`
// samples at each end and steady-state initial conditions.
inline std::vector<double> filtfilt(const SosFilter& f, std::span<const double> x, std::size_t padlen) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  padlen = std::min(padlen, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  auto fwd = sos_filter(f, ext, ext.front());
  std::reverse(fwd.begin(), fwd.end());
  auto bwd = sos_filter(f, fwd, fwd.front());
  std::reverse(bwd.begin(), bwd.end());
  return {bwd.begin() + static_cast<std::ptrdiff_t>(padlen),
          bwd.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

}  // namespace skillfuse
