#pragma once

// Neural-signal preprocessing: raw two-wavelength intensities to clean,
// resampled, normalized oxy-hemoglobin channel matrices.

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillfuse/common.hpp"
#include "skillfuse/filter.hpp"
#include "skillfuse/spline.hpp"

namespace skillfuse {

// Half-open sample range [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  [[nodiscard]] std::size_t size() const noexcept { return end > begin ? end - begin : 0; }
};

struct IntensitySeries {
  Matrix samples;  // T x W, strictly positive
  double sample_rate_hz = 1.0;
  std::vector<double> wavelengths_nm;
  std::string channel_id;
};

struct OdSeries {
  Matrix samples;  // T x W optical density
  double sample_rate_hz = 1.0;
  std::vector<double> wavelengths_nm;
  std::string channel_id;
};

struct HemoSeries {
  std::vector<double> delta_hbo;  // micromolar
  std::vector<double> delta_hbr;
  double sample_rate_hz = 1.0;
  std::string channel_id;
};

// Modified Beer-Lambert parameters.
//
// extinction[w][j]: wavelength w, chromophore j in {HbO, HbR}, in mm^-1 uM^-1
// on the base-10 absorbance scale. The defaults are the tabulated molar
// extinction coefficients at 690 nm and 830 nm (Prahl's compilation, converted
// from cm^-1/M), DPF 6 per wavelength and a 30 mm source-detector distance.
struct MbllParams {
  std::array<std::array<double, 2>, 2> extinction{{{2.7600e-5, 2.05196e-4}, {9.7400e-5, 6.9304e-5}}};
  std::vector<double> dpf{6.0, 6.0};
  double distance_mm = 30.0;

  [[nodiscard]] double determinant() const {
    return extinction[0][0] * extinction[1][1] - extinction[0][1] * extinction[1][0];
  }

  void validate() const {
    if (dpf.size() != 2) throw std::invalid_argument("MbllParams: dpf needs one value per wavelength (2)");
    for (double v : dpf)
      if (!(v > 0)) throw std::invalid_argument("MbllParams: dpf must be positive");
    if (!(distance_mm > 0)) throw std::invalid_argument("MbllParams: distance_mm must be positive");
    for (const auto& row : extinction)
      for (double v : row)
        if (!(v > 0)) throw std::invalid_argument("MbllParams: extinction coefficients must be positive");
    if (!(std::abs(determinant()) > 1e-12)) throw numeric_error("MbllParams: extinction matrix is singular");
  }

  // Delta OD produced at wavelength w by concentration changes (hbo, hbr).
  [[nodiscard]] double forward(std::size_t w, double hbo, double hbr) const {
    return (extinction[w][0] * hbo + extinction[w][1] * hbr) * distance_mm * dpf[w];
  }
};

inline constexpr std::array<double, 2> kDefaultWavelengthsNm{690.0, 830.0};

// OD[t][w] = -log10(I[t][w] / mean(I[baseline][w])).
inline OdSeries optical_density(const IntensitySeries& intensity, IndexRange baseline) {
  const auto& in = intensity.samples;
  if (baseline.size() == 0) throw std::invalid_argument("optical_density: empty baseline window");
  if (baseline.end > in.rows()) throw std::invalid_argument("optical_density: baseline window outside series");
  for (double v : in.values())
    if (!(v > 0)) throw std::domain_error("optical_density: intensities must be positive");

  OdSeries od{Matrix(in.rows(), in.cols()), intensity.sample_rate_hz, intensity.wavelengths_nm,
              intensity.channel_id};
  for (std::size_t w = 0; w < in.cols(); ++w) {
    double ref = 0.0;
    for (std::size_t t = baseline.begin; t < baseline.end; ++t) ref += in(t, w);
    ref /= static_cast<double>(baseline.size());
    for (std::size_t t = 0; t < in.rows(); ++t) od.samples(t, w) = -std::log10(in(t, w) / ref);
  }
  return od;
}

// Baseline window covering the first `seconds` of a series sampled at fs.
inline IndexRange leading_window(std::size_t length, double fs_hz, double seconds) {
  const auto n = static_cast<std::size_t>(std::llround(seconds * fs_hz));
  return {0, std::clamp<std::size_t>(n, 1, length)};
}

struct BandpassParams {
  double low_hz = 0.01;
  double high_hz = 0.5;
  int order = 3;
};

// Samples needed before the forward-backward filter is considered warmed up.
inline std::size_t bandpass_min_length(int order) { return static_cast<std::size_t>(3 * order * 2); }

// Zero-phase Butterworth band-pass of each column of a T x C matrix.
inline Matrix bandpass_filter(const Matrix& x, double fs_hz, const BandpassParams& p = {}) {
  if (!(p.low_hz > 0 && p.low_hz < p.high_hz && p.high_hz < fs_hz / 2))
    throw std::invalid_argument("bandpass_filter: cutoffs must satisfy 0 < low < high < fs/2");
  const std::size_t warmup = bandpass_min_length(p.order);
  if (x.rows() < warmup) throw std::invalid_argument("bandpass_filter: series shorter than filter warm-up");
  const SosFilter filter = butterworth_bandpass(p.order, p.low_hz, p.high_hz, fs_hz);
  Matrix y(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const auto col = x.col(c);
    y.set_col(c, filtfilt(filter, col, warmup));
  }
  return y;
}

inline OdSeries bandpass_filter(const OdSeries& od, double low_hz = 0.01, double high_hz = 0.5) {
  OdSeries out = od;
  out.samples = bandpass_filter(od.samples, od.sample_rate_hz, BandpassParams{low_hz, high_hz, 3});
  return out;
}

struct MotionCorrectionParams {
  int passes = 3;
  double detect_window_s = 1.0;
  double detect_k = 3.0;
  double smoothing = 0.99;  // smoothing-spline p
};

namespace detail {

// Centered moving standard deviation (population form), window clipped at the edges.
inline std::vector<double> moving_std(std::span<const double> x, std::size_t window) {
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  const std::size_t half = window / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, lo + window);
    double m = 0.0;
    for (std::size_t k = lo; k < hi; ++k) m += x[k];
    m /= static_cast<double>(hi - lo);
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += (x[k] - m) * (x[k] - m);
    out[i] = std::sqrt(s / static_cast<double>(hi - lo));
  }
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

inline double range_mean(std::span<const double> x, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += x[i];
  return s / static_cast<double>(end - begin);
}

// One detection + spline-subtraction + re-leveling pass on a single column.
// Returns false when no segment exceeded the threshold (column untouched).
inline bool motion_correct_pass(std::vector<double>& x, double fs_hz, const MotionCorrectionParams& p) {
  const std::size_t n = x.size();
  const auto window = static_cast<std::size_t>(std::llround(p.detect_window_s * fs_hz));
  const auto mstd = moving_std(x, window);
  const double threshold = p.detect_k * median(mstd);

  struct Segment {
    std::size_t begin, end;
    bool artifact;
  };
  std::vector<Segment> segments;
  bool any = false;
  for (std::size_t i = 0; i < n;) {
    const bool art = mstd[i] > threshold;
    std::size_t j = i;
    while (j < n && (mstd[j] > threshold) == art) ++j;
    segments.push_back({i, j, art});
    any = any || art;
    i = j;
  }
  if (!any) return false;

  for (const auto& s : segments) {
    if (!s.artifact) continue;
    const std::size_t len = s.end - s.begin;
    std::vector<double> t(len), y(len);
    for (std::size_t k = 0; k < len; ++k) {
      t[k] = static_cast<double>(k) / fs_hz;
      y[k] = x[s.begin + k];
    }
    const auto fit = smoothing_spline(t, y, p.smoothing);
    for (std::size_t k = 0; k < len; ++k) x[s.begin + k] -= fit[k];
  }

  // Re-level each segment so its leading mean meets the trailing mean of its
  // predecessor. Means are taken over a third of a second at the boundary so
  // genuine slow changes next to a segment are not folded into the shift.
  const std::size_t level_window = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fs_hz / 3.0)));
  for (std::size_t i = 1; i < segments.size(); ++i) {
    const auto& prev = segments[i - 1];
    const auto& cur = segments[i];
    const std::size_t lp = std::min(level_window, prev.end - prev.begin);
    const std::size_t lc = std::min(level_window, cur.end - cur.begin);
    const double shift = range_mean(x, prev.end - lp, prev.end) - range_mean(x, cur.begin, cur.begin + lc);
    for (std::size_t k = cur.begin; k < cur.end; ++k) x[k] += shift;
  }
  return true;
}

}  // namespace detail

// Spline-based motion-artifact correction applied column by column.
inline Matrix spline_motion_correct(const Matrix& x, double fs_hz, const MotionCorrectionParams& p = {}) {
  if (p.passes < 0) throw std::invalid_argument("spline_motion_correct: passes must be >= 0");
  if (p.passes == 0) return x;
  if (p.detect_window_s * fs_hz < 3.0)
    throw std::invalid_argument("spline_motion_correct: detection window must span >= 3 samples");
  Matrix out = x;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    auto col = x.col(c);
    for (int pass = 0; pass < p.passes; ++pass)
      if (!detail::motion_correct_pass(col, fs_hz, p)) break;
    out.set_col(c, col);
  }
  return out;
}

inline OdSeries spline_motion_correct(const OdSeries& od, const MotionCorrectionParams& p = {}) {
  OdSeries out = od;
  out.samples = spline_motion_correct(od.samples, od.sample_rate_hz, p);
  return out;
}

// Inverts the modified Beer-Lambert forward model sample by sample.
inline HemoSeries mbll_convert(const OdSeries& od, const MbllParams& params) {
  if (od.samples.cols() != 2) throw std::invalid_argument("mbll_convert: exactly two wavelengths required");
  params.validate();
  const auto& e = params.extinction;
  const double det = params.determinant();
  const double s0 = params.distance_mm * params.dpf[0];
  const double s1 = params.distance_mm * params.dpf[1];

  HemoSeries out;
  out.sample_rate_hz = od.sample_rate_hz;
  out.channel_id = od.channel_id;
  const std::size_t n = od.samples.rows();
  out.delta_hbo.resize(n);
  out.delta_hbr.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double v0 = od.samples(t, 0) / s0;
    const double v1 = od.samples(t, 1) / s1;
    out.delta_hbo[t] = (e[1][1] * v0 - e[0][1] * v1) / det;
    out.delta_hbr[t] = (-e[1][0] * v0 + e[0][0] * v1) / det;
  }
  return out;
}

struct Resampled {
  Matrix data;
  double sample_rate_hz;
};

// Number of uniform samples at target_hz covering the source duration.
inline std::size_t resampled_length(std::size_t rows, double source_hz, double target_hz) {
  const double duration = static_cast<double>(rows - 1) / source_hz;
  return static_cast<std::size_t>(std::floor(duration * target_hz + 1e-9)) + 1;
}

// Linear interpolation onto t = 0, 1/target, 2/target, ... up to the last source time.
inline Resampled resample_uniform(const Matrix& x, double source_hz, double target_hz = 1.0) {
  if (!(target_hz > 0) || !(source_hz > 0)) throw std::invalid_argument("resample_uniform: rates must be positive");
  if (x.rows() < 2) throw std::invalid_argument("resample_uniform: need at least two samples");
  const std::size_t n_out = resampled_length(x.rows(), source_hz, target_hz);
  const double step = source_hz / target_hz;
  const std::size_t last = x.rows() - 1;
  Matrix y(n_out, x.cols());
  for (std::size_t k = 0; k < n_out; ++k) {
    const double pos = static_cast<double>(k) * step;
    auto i0 = static_cast<std::size_t>(std::floor(pos));
    double frac = pos - static_cast<double>(i0);
    if (i0 >= last) {
      i0 = last;
      frac = 0.0;
    }
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double a = x(i0, c);
      y(k, c) = frac == 0.0 ? a : a + frac * (x(i0 + 1, c) - a);
    }
  }
  return {std::move(y), target_hz};
}

// Per-column min-max scaling to [0, 1]; constant columns map to 0.5.
inline Matrix minmax_normalize(const Matrix& x) {
  if (x.rows() < 1) throw std::invalid_argument("minmax_normalize: empty matrix");
  Matrix y(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double lo = x(0, c), hi = x(0, c);
    for (std::size_t t = 1; t < x.rows(); ++t) {
      lo = std::min(lo, x(t, c));
      hi = std::max(hi, x(t, c));
    }
    const double span = hi - lo;
    for (std::size_t t = 0; t < x.rows(); ++t) y(t, c) = span > 0 ? (x(t, c) - lo) / span : 0.5;
  }
  return y;
}

}  // namespace skillfuse
