#pragma once

// Distribution-comparison statistics: Tukey fences, Shapiro-Wilk (AS R94),
// Welch's t and Mann-Whitney U, and the normality-gated one-sided protocol.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "skillfuse/common.hpp"

namespace skillfuse {

// Linear interpolation between order statistics (Hyndman-Fan type 7).
inline double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q outside [0, 1]");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  const double h = (static_cast<double>(s.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

struct Fences {
  double q1, q3, lower, upper;
};

inline Fences tukey_bounds(std::span<const double> values, double k = 1.5) {
  if (values.size() < 4) throw std::invalid_argument("tukey_fences: need at least 4 values");
  const double q1 = quantile(values, 0.25), q3 = quantile(values, 0.75);
  const double iqr = q3 - q1;
  return {q1, q3, q1 - k * iqr, q3 + k * iqr};
}

// Keeps values inside the fences, preserving order.
inline std::vector<double> tukey_fences(std::span<const double> values, double k = 1.5) {
  const auto f = tukey_bounds(values, k);
  std::vector<double> out;
  for (double v : values)
    if (v >= f.lower && v <= f.upper) out.push_back(v);
  return out;
}

struct ShapiroWilk {
  double w;
  double p;
};

namespace detail {

inline double poly(std::span<const double> c, double x) {
  double r = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) r = r * x + c[i];
  return r;
}

inline double qnorm(double p) { return boost::math::quantile(boost::math::normal(), p); }

}  // namespace detail

// Royston's AS R94 algorithm. Throws domain_error on a zero-range sample.
inline ShapiroWilk shapiro_wilk(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 3 || n > 5000) throw std::invalid_argument("shapiro_wilk: n must be in [3, 5000]");
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 1e-19)) throw std::domain_error("shapiro_wilk: zero range");

  static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
  static constexpr double g[] = {-2.273, 0.459};

  const double an = static_cast<double>(n);
  const std::size_t half = n / 2;
  std::vector<double> a(half + 1, 0.0);  // 1-based, a[1] pairs with the extremes
  if (n == 3) {
    a[1] = std::sqrt(0.5);
  } else {
    const double an25 = an + 0.25;
    double summ2 = 0.0;
    for (std::size_t i = 1; i <= half; ++i) {
      a[i] = detail::qnorm((static_cast<double>(i) - 0.375) / an25);
      summ2 += a[i] * a[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = detail::poly(c1, rsn) - a[1] / ssumm2;
    std::size_t i1;
    double fac;
    if (n > 5) {
      i1 = 3;
      const double a2 = -a[2] / ssumm2 + detail::poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * a[1] * a[1] - 2.0 * a[2] * a[2]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[2] = a2;
    } else {
      i1 = 2;
      fac = std::sqrt((summ2 - 2.0 * a[1] * a[1]) / (1.0 - 2.0 * a1 * a1));
    }
    a[1] = a1;
    for (std::size_t i = i1; i <= half; ++i) a[i] /= -fac;
  }

  // W as the squared correlation between the scaled data and the coefficients.
  auto coef = [&](std::size_t i) {
    const std::size_t j = n - 1 - i;
    if (i == j) return 0.0;
    return i < j ? -a[1 + i] : a[1 + j];
  };
  double sa = 0.0, sx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sa += coef(i);
    sx += x[i] / range;
  }
  sa /= an;
  sx /= an;
  double ssa = 0.0, ssx = 0.0, sax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double asa = coef(i) - sa;
    const double xsx = x[i] / range - sx;
    ssa += asa * asa;
    ssx += xsx * xsx;
    sax += asa * xsx;
  }
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
  const double w = 1.0 - w1;

  if (n == 3) {
    constexpr double pi6 = 6.0 / 3.14159265358979323846, stqr = 3.14159265358979323846 / 3.0;
    return {w, std::clamp(pi6 * (std::asin(std::sqrt(w)) - stqr), 0.0, 1.0)};
  }
  double y = std::log(w1);
  double m, s;
  if (n <= 11) {
    const double gamma = detail::poly(g, an);
    if (y >= gamma) return {w, 1e-99};
    y = -std::log(gamma - y);
    m = detail::poly(c3, an);
    s = std::exp(detail::poly(c4, an));
  } else {
    const double lx = std::log(an);
    m = detail::poly(c5, lx);
    s = std::exp(detail::poly(c6, lx));
  }
  return {w, boost::math::cdf(boost::math::complement(boost::math::normal(m, s), y))};
}

struct TestResult {
  double statistic;
  double p_value;
  double df = 0.0;  // Welch degrees of freedom; 0 for rank tests
};

// One-sided Welch t-test of H1: mean(hi) > mean(lo).
inline TestResult welch_t_greater(std::span<const double> hi, std::span<const double> lo) {
  if (hi.size() < 2 || lo.size() < 2) throw std::invalid_argument("welch: need at least 2 values per sample");
  const double na = static_cast<double>(hi.size()), nb = static_cast<double>(lo.size());
  const double va = std::pow(stddev(hi), 2) / na, vb = std::pow(stddev(lo), 2) / nb;
  const double se2 = va + vb;
  if (!(se2 > 0.0)) throw std::domain_error("welch: both samples are constant");
  const double t = (mean(hi) - mean(lo)) / std::sqrt(se2);
  const double df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const double p = boost::math::cdf(boost::math::complement(boost::math::students_t(df), t));
  return {t, p, df};
}

// Count of pairs (x in a, y in b) with x > y, ties counted one half.
inline double mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  double u = 0.0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return u;
}

namespace detail {

// Mid-ranks of the pooled sample (1-based, ties averaged).
inline std::vector<double> mid_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = rank;
    i = j + 1;
  }
  return r;
}

}  // namespace detail

// Size limit (per sample) for the exact permutation distribution.
inline constexpr std::size_t kMannWhitneyExactMax = 20;

// One-sided Mann-Whitney test of H1: `hi` stochastically greater than `lo`.
// Exact permutation distribution of the (tie-aware) rank sum when both samples
// have at most 20 values, otherwise a tie-corrected normal approximation with
// continuity correction.
inline TestResult mann_whitney_greater(std::span<const double> hi, std::span<const double> lo) {
  if (hi.empty() || lo.empty()) throw std::invalid_argument("mann_whitney: empty sample");
  const std::size_t n1 = hi.size(), n2 = lo.size(), n = n1 + n2;
  const double u = mann_whitney_u(hi, lo);
  std::vector<double> pooled(hi.begin(), hi.end());
  pooled.insert(pooled.end(), lo.begin(), lo.end());
  const auto ranks = detail::mid_ranks(pooled);

  if (n1 <= kMannWhitneyExactMax && n2 <= kMannWhitneyExactMax) {
    // Doubled mid-ranks are integers; count subsets of size n1 by rank sum.
    std::vector<std::size_t> r2(n);
    std::size_t max_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      r2[i] = static_cast<std::size_t>(std::lround(2.0 * ranks[i]));
      max_sum += r2[i];
    }
    std::vector<std::vector<double>> count(n1 + 1, std::vector<double>(max_sum + 1, 0.0));
    count[0][0] = 1.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = std::min(i + 1, n1); k >= 1; --k)
        for (std::size_t s = max_sum; s >= r2[i]; --s) count[k][s] += count[k - 1][s - r2[i]];
    std::size_t observed = 0;
    for (std::size_t i = 0; i < n1; ++i) observed += r2[i];
    double tail = 0.0, total = 0.0;
    for (std::size_t s = 0; s <= max_sum; ++s) {
      total += count[n1][s];
      if (s >= observed) tail += count[n1][s];
    }
    return {u, std::min(1.0, tail / total)};
  }

  const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2), dn = static_cast<double>(n);
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double mu = dn1 * dn2 / 2.0;
  const double var = dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (!(var > 0.0)) return {u, 1.0};
  const double z = (u - mu - 0.5) / std::sqrt(var);
  return {u, boost::math::cdf(boost::math::complement(boost::math::normal(), z))};
}

enum class TestKind { t_one_sided, mann_whitney_one_sided };
enum class Direction { a_greater, b_greater };

inline std::string_view to_string(TestKind k) {
  return k == TestKind::t_one_sided ? "t_one_sided" : "mann_whitney_one_sided";
}
inline std::string_view to_string(Direction d) { return d == Direction::a_greater ? "a_greater" : "b_greater"; }

inline constexpr double kAlpha = 0.05;

struct StatReport {
  std::size_t n_a = 0, n_b = 0;  // after outlier removal
  bool normal_a = false, normal_b = false;
  double shapiro_p_a = 0.0, shapiro_p_b = 0.0;
  TestKind test_used = TestKind::mann_whitney_one_sided;
  double statistic = 0.0;
  double p_value = 1.0;
  bool significant = false;
  Direction direction = Direction::a_greater;
};

namespace detail {

inline std::pair<bool, double> normality(std::span<const double> v) {
  try {
    const auto r = shapiro_wilk(v);
    return {r.p >= kAlpha, r.p};
  } catch (const std::domain_error&) {
    return {false, 0.0};  // constant sample
  }
}

}  // namespace detail

// Tukey fences on each sample, Shapiro-Wilk on each, then a one-sided Welch t
// (both normal) or Mann-Whitney U test with the larger-mean sample as the
// alternative.
inline StatReport significance_test(std::span<const double> a, std::span<const double> b) {
  const auto fa = tukey_fences(a), fb = tukey_fences(b);
  if (fa.size() < 4 || fb.size() < 4) throw std::invalid_argument("significance_test: fewer than 4 values after outlier removal");
  StatReport r;
  r.n_a = fa.size();
  r.n_b = fb.size();
  std::tie(r.normal_a, r.shapiro_p_a) = detail::normality(fa);
  std::tie(r.normal_b, r.shapiro_p_b) = detail::normality(fb);
  r.direction = mean(fb) > mean(fa) ? Direction::b_greater : Direction::a_greater;
  const auto& hi = r.direction == Direction::a_greater ? fa : fb;
  const auto& lo = r.direction == Direction::a_greater ? fb : fa;
  TestResult res;
  if (r.normal_a && r.normal_b) {
    r.test_used = TestKind::t_one_sided;
    res = welch_t_greater(hi, lo);
  } else {
    r.test_used = TestKind::mann_whitney_one_sided;
    res = mann_whitney_greater(hi, lo);
  }
  r.statistic = res.statistic;
  r.p_value = std::clamp(res.p_value, 0.0, 1.0);
  r.significant = r.p_value < kAlpha;
  return r;
}

}  // namespace skillfuse
