#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "skillfuse/random.hpp"
#include "skillfuse/signal.hpp"

using namespace skillfuse;
using Catch::Approx;

namespace {

constexpr double kFs = 7.8125;

std::vector<double> sine(double f, double fs, std::size_t n, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2 * std::numbers::pi * f * i / fs);
  return x;
}

double max_abs(std::span<const double> x, std::size_t begin, std::size_t end) {
  double m = 0;
  for (std::size_t i = begin; i < end; ++i) m = std::max(m, std::abs(x[i]));
  return m;
}

// Squared magnitude of the analog Butterworth band-pass at the pre-warped
// frequency; the bilinear design matches it exactly, and forward-backward
// filtering squares it.
double analog_bandpass_gain_sq(double f, double lo, double hi, double fs, int order) {
  auto warp = [fs](double x) { return 2 * fs * std::tan(std::numbers::pi * x / fs); };
  const double w = warp(f), wl = warp(lo), wh = warp(hi);
  const double ratio = (w * w - wl * wh) / (w * (wh - wl));
  return 1.0 / (1.0 + std::pow(ratio * ratio, order));
}

// Dense oracle: smoothing spline values g = (I + alpha Q R^-1 Q')^-1 y.
std::vector<double> dense_smoothing_spline(const std::vector<double>& t, const std::vector<double>& y, double p) {
  const std::size_t n = t.size(), m = n - 2;
  const double alpha = (1 - p) / p;
  std::vector<std::vector<double>> Q(n, std::vector<double>(m, 0.0)), R(m, std::vector<double>(m, 0.0));
  for (std::size_t j = 0; j < m; ++j) {
    const double h0 = t[j + 1] - t[j], h1 = t[j + 2] - t[j + 1];
    Q[j][j] = 1 / h0;
    Q[j + 1][j] = -1 / h0 - 1 / h1;
    Q[j + 2][j] = 1 / h1;
    R[j][j] = (h0 + h1) / 3;
    if (j + 1 < m) R[j][j + 1] = R[j + 1][j] = h1 / 6;
  }
  auto solve = [](std::vector<std::vector<double>> A, std::vector<double> b) {
    const std::size_t k = b.size();
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < k; ++r)
        if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
      std::swap(A[c], A[piv]);
      std::swap(b[c], b[piv]);
      for (std::size_t r = c + 1; r < k; ++r) {
        const double f = A[r][c] / A[c][c];
        for (std::size_t cc = c; cc < k; ++cc) A[r][cc] -= f * A[c][cc];
        b[r] -= f * b[c];
      }
    }
    std::vector<double> x(k);
    for (std::size_t r = k; r-- > 0;) {
      double s = b[r];
      for (std::size_t cc = r + 1; cc < k; ++cc) s -= A[r][cc] * x[cc];
      x[r] = s / A[r][r];
    }
    return x;
  };
  // K = Q R^-1 Q' built column by column.
  std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<double> qt(m);
    for (std::size_t j = 0; j < m; ++j) qt[j] = Q[c][j];
    const auto rinv = solve(R, qt);
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0;
      for (std::size_t j = 0; j < m; ++j) s += Q[r][j] * rinv[j];
      A[r][c] = (r == c ? 1.0 : 0.0) + alpha * s;
    }
  }
  return solve(A, y);
}

}  // namespace

TEST_CASE("optical density examples", "[signalproc]") {
  IntensitySeries in{Matrix(10, 2, 3.0), kFs, {690, 830}, "S1D1"};
  auto od = optical_density(in, {0, 5});
  for (double v : od.samples.values()) REQUIRE(v == 0.0);

  in.samples(7, 0) = 0.3;  // baseline mean stays 3.0
  od = optical_density(in, {0, 5});
  REQUIRE(od.samples(7, 0) == Approx(1.0).epsilon(1e-14));

  IntensitySeries two{Matrix(4, 2, 2.0), kFs, {690, 830}, "S1D1"};
  two.samples(3, 1) = 1.0;
  od = optical_density(two, {0, 2});
  REQUIRE(od.samples(3, 1) == Approx(std::log10(2.0)).epsilon(1e-14));
  REQUIRE(od.samples(3, 1) == Approx(0.30103).margin(1e-5));
}

TEST_CASE("optical density is invariant to intensity scaling", "[signalproc][property]") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    IntensitySeries in{Matrix(50, 2), kFs, {690, 830}, "c"};
    for (double& v : in.samples.values()) v = rng.uniform(0.5, 2.0);
    const double k = rng.uniform(0.01, 100.0);
    IntensitySeries scaled = in;
    for (double& v : scaled.samples.values()) v *= k;
    const auto a = optical_density(in, {0, 10});
    const auto b = optical_density(scaled, {0, 10});
    for (std::size_t i = 0; i < a.samples.size(); ++i)
      REQUIRE(a.samples.values()[i] == Approx(b.samples.values()[i]).margin(1e-12));
  }
}

TEST_CASE("optical density errors", "[signalproc]") {
  IntensitySeries in{Matrix(10, 2, 1.0), kFs, {690, 830}, "c"};
  REQUIRE_THROWS_AS(optical_density(in, {3, 3}), std::invalid_argument);
  REQUIRE_THROWS_AS(optical_density(in, {5, 11}), std::invalid_argument);
  in.samples(4, 1) = 0.0;
  REQUIRE_THROWS_AS(optical_density(in, {0, 3}), std::domain_error);
  in.samples(4, 1) = -1.0;
  REQUIRE_THROWS_AS(optical_density(in, {0, 3}), std::domain_error);
}

TEST_CASE("butterworth design matches the analog magnitude oracle", "[signalproc][filter]") {
  const auto f = butterworth_bandpass(3, 0.01, 0.5, kFs);
  REQUIRE(f.sections.size() == 3);
  for (double freq : {0.001, 0.01, 0.05, 0.1, 0.3, 0.5, 1.0, 2.0, 3.5}) {
    const double mag2 = std::pow(f.magnitude(freq, kFs), 2);
    REQUIRE(mag2 == Approx(analog_bandpass_gain_sq(freq, 0.01, 0.5, kFs, 3)).margin(1e-9));
  }
  // half-power at both edges
  REQUIRE(std::pow(f.magnitude(0.01, kFs), 2) == Approx(0.5).margin(1e-9));
  REQUIRE(std::pow(f.magnitude(0.5, kFs), 2) == Approx(0.5).margin(1e-9));
  // forward-backward gain at 2x the high cutoff is the squared magnitude
  REQUIRE(std::pow(f.magnitude(1.0, kFs), 2) < 0.1);
}

TEST_CASE("bandpass filter contract", "[signalproc][filter]") {
  const std::size_t n = static_cast<std::size_t>(600 * kFs);
  const std::size_t lo = n / 4, hi = 3 * n / 4;

  SECTION("DC removed") {
    const Matrix dc(n, 1, 5.0);
    const auto y = bandpass_filter(dc, kFs);
    REQUIRE(max_abs(y.values(), 0, n) < 1e-3 * 5.0);
  }
  SECTION("0.1 Hz passes within 5%") {
    const auto y = bandpass_filter(Matrix::column(sine(0.1, kFs, n)), kFs);
    // amplitude by least-squares projection onto sin/cos over the middle half
    double ss = 0, sc = 0, nn = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double ph = 2 * std::numbers::pi * 0.1 * i / kFs;
      ss += y.values()[i] * std::sin(ph);
      sc += y.values()[i] * std::cos(ph);
      nn += 1;
    }
    const double amp = 2 * std::hypot(ss, sc) / nn;
    REQUIRE(amp == Approx(analog_bandpass_gain_sq(0.1, 0.01, 0.5, kFs, 3)).margin(1e-3));
    REQUIRE(std::abs(amp - 1.0) < 0.05);
  }
  SECTION("2 Hz attenuated by at least 20 dB") {
    const auto y = bandpass_filter(Matrix::column(sine(2.0, kFs, n)), kFs);
    REQUIRE(max_abs(y.values(), lo, hi) <= 0.1);
  }
  SECTION("zero phase: cross-correlation peaks at lag 0") {
    const auto x = sine(0.07, kFs, n);
    const auto y = bandpass_filter(Matrix::column(x), kFs);
    int best_lag = 99;
    double best = -1e300;
    for (int lag = -20; lag <= 20; ++lag) {
      double s = 0;
      for (std::size_t i = lo; i < hi; ++i) s += x[i] * y.values()[static_cast<std::size_t>(static_cast<long>(i) + lag)];
      if (s > best) {
        best = s;
        best_lag = lag;
      }
    }
    REQUIRE(best_lag == 0);
  }
}

TEST_CASE("bandpass filter is linear", "[signalproc][filter][property]") {
  Rng rng(3);
  const std::size_t n = 400;
  Matrix x(n, 1), y(n, 1), z(n, 1);
  const double a = 1.7, b = -0.4;
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = rng.normal();
    y(i, 0) = rng.normal();
    z(i, 0) = a * x(i, 0) + b * y(i, 0);
  }
  const auto fx = bandpass_filter(x, kFs), fy = bandpass_filter(y, kFs), fz = bandpass_filter(z, kFs);
  for (std::size_t i = 0; i < n; ++i) REQUIRE(fz(i, 0) == Approx(a * fx(i, 0) + b * fy(i, 0)).margin(1e-9));
}

TEST_CASE("bandpass filter errors", "[signalproc][filter]") {
  const Matrix x(100, 1, 1.0);
  REQUIRE_THROWS_AS(bandpass_filter(x, kFs, {0.01, 4.0, 3}), std::invalid_argument);
  REQUIRE_THROWS_AS(bandpass_filter(x, kFs, {0.0, 0.5, 3}), std::invalid_argument);
  REQUIRE_THROWS_AS(bandpass_filter(x, kFs, {0.6, 0.5, 3}), std::invalid_argument);
  REQUIRE_THROWS_AS(bandpass_filter(Matrix(17, 1, 1.0), kFs), std::invalid_argument);
  REQUIRE_NOTHROW(bandpass_filter(Matrix(18, 1, 1.0), kFs));
}

TEST_CASE("smoothing spline against dense oracle", "[signalproc][spline]") {
  Rng rng(5);
  std::vector<double> t(25), y(25);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = 0.128 * i + (i % 3) * 0.01;
    y[i] = std::sin(t[i] * 2) + 0.3 * rng.normal();
  }
  for (double p : {0.2, 0.9, 0.99, 0.9999}) {
    const auto fast = smoothing_spline(t, y, p);
    const auto oracle = dense_smoothing_spline(t, y, p);
    for (std::size_t i = 0; i < t.size(); ++i) REQUIRE(fast[i] == Approx(oracle[i]).margin(1e-9));
  }
  REQUIRE(smoothing_spline(t, y, 1.0) == y);

  // p -> 0 approaches the least-squares line
  const auto line = smoothing_spline(t, y, 1e-12);
  const double tm = mean(t), ym = mean(y);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sxy += (t[i] - tm) * (y[i] - ym);
    sxx += (t[i] - tm) * (t[i] - tm);
  }
  for (std::size_t i = 0; i < t.size(); ++i) REQUIRE(line[i] == Approx(ym + sxy / sxx * (t[i] - tm)).margin(1e-6));
}

TEST_CASE("spline motion correction", "[signalproc][spline]") {
  const std::size_t n = static_cast<std::size_t>(60 * kFs);
  Rng rng(17);
  std::vector<double> clean(n);
  for (std::size_t i = 0; i < n; ++i)
    clean[i] = std::sin(2 * std::numbers::pi * 0.05 * i / kFs) + 0.01 * rng.normal();
  const Matrix clean_m = Matrix::column(clean);

  SECTION("zero passes is the identity") {
    Matrix noisy = clean_m;
    noisy(100, 0) += 50;
    REQUIRE(spline_motion_correct(noisy, kFs, {0, 1.0, 3.0, 0.99}) == noisy);
  }
  SECTION("smooth signal below threshold is unchanged") {
    std::vector<double> smooth(n);
    for (std::size_t i = 0; i < n; ++i) smooth[i] = 1e-3 * std::sin(2 * std::numbers::pi * 0.05 * i / kFs);
    const auto out = spline_motion_correct(Matrix::column(smooth), kFs);
    for (std::size_t i = 0; i < n; ++i) REQUIRE(std::abs(out(i, 0) - smooth[i]) <= 1e-12);
  }
  SECTION("10 sigma step artifact over 2 s is removed") {
    const double sigma = stddev(clean);
    Matrix art = clean_m;
    const std::size_t start = n / 2, ramp = static_cast<std::size_t>(2 * kFs);
    for (std::size_t i = start; i < n; ++i)
      art(i, 0) += 10 * sigma * std::min(1.0, static_cast<double>(i - start) / static_cast<double>(ramp));
    REQUIRE(stddev(art.col(0)) > 3 * sigma);
    const auto out = spline_motion_correct(art, kFs);
    REQUIRE(out.rows() == n);
    REQUIRE(stddev(out.col(0)) <= 1.5 * sigma);
  }
  SECTION("length preserved and negative passes rejected") {
    Matrix noisy = clean_m;
    for (std::size_t i = 200; i < 210; ++i) noisy(i, 0) += 5;
    REQUIRE(spline_motion_correct(noisy, kFs).rows() == n);
    REQUIRE_THROWS_AS(spline_motion_correct(noisy, kFs, {-1, 1.0, 3.0, 0.99}), std::invalid_argument);
  }
}

TEST_CASE("MBLL conversion", "[signalproc][mbll]") {
  const MbllParams params;
  OdSeries zero{Matrix(5, 2, 0.0), kFs, {690, 830}, "c"};
  const auto h0 = mbll_convert(zero, params);
  for (std::size_t t = 0; t < 5; ++t) {
    REQUIRE(h0.delta_hbo[t] == 0.0);
    REQUIRE(h0.delta_hbr[t] == 0.0);
  }

  OdSeries od{Matrix(1, 2), kFs, {690, 830}, "c"};
  od.samples(0, 0) = params.forward(0, 1.0, -0.5);
  od.samples(0, 1) = params.forward(1, 1.0, -0.5);
  const auto h = mbll_convert(od, params);
  REQUIRE(std::abs(h.delta_hbo[0] - 1.0) < 1e-9);
  REQUIRE(std::abs(h.delta_hbr[0] + 0.5) < 1e-9);

  MbllParams singular = params;
  singular.extinction[1] = singular.extinction[0];
  REQUIRE_THROWS_AS(mbll_convert(od, singular), numeric_error);

  OdSeries three{Matrix(3, 3, 0.0), kFs, {690, 760, 830}, "c"};
  REQUIRE_THROWS_AS(mbll_convert(three, params), std::invalid_argument);
}

TEST_CASE("MBLL round trip and linearity", "[signalproc][mbll][property]") {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    MbllParams p;
    for (auto& row : p.extinction)
      for (double& v : row) v = rng.uniform(1e-5, 3e-4);
    p.dpf = {rng.uniform(4, 8), rng.uniform(4, 8)};
    p.distance_mm = rng.uniform(20, 40);
    if (std::abs(p.determinant()) < 1e-10) continue;
    const double hbo = rng.normal(0, 2), hbr = rng.normal(0, 1);
    OdSeries od{Matrix(2, 2), 1.0, {690, 830}, "c"};
    for (std::size_t w = 0; w < 2; ++w) {
      od.samples(0, w) = p.forward(w, hbo, hbr);
      od.samples(1, w) = 3 * p.forward(w, hbo, hbr);
    }
    const auto h = mbll_convert(od, p);
    REQUIRE(std::abs(h.delta_hbo[0] - hbo) < 1e-9);
    REQUIRE(std::abs(h.delta_hbr[0] - hbr) < 1e-9);
    REQUIRE(h.delta_hbo[1] == Approx(3 * h.delta_hbo[0]).margin(1e-9));
  }
}

TEST_CASE("uniform resampling", "[signalproc][resample]") {
  Rng rng(2);
  Matrix x(50, 3);
  for (double& v : x.values()) v = rng.normal();
  const auto same = resample_uniform(x, kFs, kFs);
  REQUIRE(same.data == x);

  Matrix ramp(79, 1);
  for (std::size_t i = 0; i < 79; ++i) ramp(i, 0) = static_cast<double>(i) / kFs;
  const auto r = resample_uniform(ramp, kFs, 1.0);
  REQUIRE(r.data.rows() == 10);
  REQUIRE(r.sample_rate_hz == 1.0);
  for (std::size_t k = 0; k < 10; ++k) REQUIRE(r.data(k, 0) == Approx(static_cast<double>(k)).margin(1e-12));

  REQUIRE(resampled_length(79, kFs, 1.0) == 10);
  REQUIRE(resampled_length(80, kFs, 1.0) == 11);  // duration 10.112 s
  REQUIRE_THROWS_AS(resample_uniform(Matrix(1, 2), kFs), std::invalid_argument);
  REQUIRE_THROWS_AS(resample_uniform(x, kFs, 0.0), std::invalid_argument);
}

TEST_CASE("min-max normalization", "[signalproc][normalize]") {
  const auto y = minmax_normalize(Matrix::from_rows({{0, 3, 0}, {1, 3, 1}, {2, 3, 1}}));
  REQUIRE(y.col(0) == std::vector<double>{0, 0.5, 1});
  REQUIRE(y.col(1) == std::vector<double>{0.5, 0.5, 0.5});
  REQUIRE(y.col(2) == std::vector<double>{0, 1, 1});

  Rng rng(9);
  Matrix x(40, 4);
  for (double& v : x.values()) v = rng.normal(3, 10);
  const auto once = minmax_normalize(x);
  for (double v : once.values()) REQUIRE((v >= 0 && v <= 1));
  REQUIRE(minmax_normalize(once) == once);
}
