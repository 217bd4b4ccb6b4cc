#pragma once

// Question-answer trust, per-class trust densities and NetTrustScore.

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillfuse/common.hpp"

namespace skillfuse {

struct PredictionRecord {
  std::string trial_id;
  int true_class = 0;
  int predicted_class = 0;
  double confidence = 0.0;  // softmax probability of predicted_class
};

inline double qa_trust(const PredictionRecord& r, double alpha = 1.0, double beta = 1.0) {
  if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) throw std::invalid_argument("qa_trust: confidence outside [0, 1]");
  return r.predicted_class == r.true_class ? std::pow(r.confidence, alpha) : std::pow(1.0 - r.confidence, beta);
}

inline constexpr std::size_t kDensityGrid = 256;

struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};

inline double trapezoid(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

// Gaussian KDE on [0, 1] with Silverman's bandwidth (floored at 0.01),
// reflected at both boundaries and renormalized on the grid.
inline DensityCurve trust_density(std::span<const double> trusts, std::size_t grid_points = kDensityGrid) {
  if (trusts.size() < 2) throw std::invalid_argument("trust_density: need at least 2 values");
  if (grid_points < 2) throw std::invalid_argument("trust_density: grid too small");
  const double n = static_cast<double>(trusts.size());
  const double h = std::max(stddev(trusts) * std::pow(4.0 / (3.0 * n), 0.2), 0.01);
  DensityCurve c;
  c.bandwidth = h;
  c.grid.resize(grid_points);
  c.density.assign(grid_points, 0.0);
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * 3.14159265358979323846));
  for (std::size_t g = 0; g < grid_points; ++g) {
    const double x = static_cast<double>(g) / static_cast<double>(grid_points - 1);
    c.grid[g] = x;
    double s = 0.0;
    for (double t : trusts)
      for (double mirror : {t, -t, 2.0 - t}) {
        const double z = (x - mirror) / h;
        s += std::exp(-0.5 * z * z);
      }
    c.density[g] = s * norm;
  }
  const double area = trapezoid(c.grid, c.density);
  for (double& d : c.density) d /= area;
  return c;
}

// Mean trust per true class; classes with no records are absent.
inline std::map<int, double> net_trust_score(std::span<const PredictionRecord> records, bool correct_only = false,
                                             double alpha = 1.0, double beta = 1.0) {
  std::map<int, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    if (correct_only && r.predicted_class != r.true_class) continue;
    auto& [sum, count] = acc[r.true_class];
    sum += qa_trust(r, alpha, beta);
    ++count;
  }
  std::map<int, double> out;
  for (const auto& [cls, sc] : acc) out[cls] = sc.first / static_cast<double>(sc.second);
  return out;
}

struct TrustSpectrum {
  std::map<int, std::vector<double>> per_class_trusts;
  std::map<int, DensityCurve> densities;  // classes with >= 2 trusts
  std::map<int, double> nts;
};

inline TrustSpectrum trust_spectrum(std::span<const PredictionRecord> records, bool correct_only = false) {
  TrustSpectrum s;
  for (const auto& r : records) {
    if (correct_only && r.predicted_class != r.true_class) continue;
    s.per_class_trusts[r.true_class].push_back(qa_trust(r));
  }
  for (const auto& [cls, t] : s.per_class_trusts)
    if (t.size() >= 2) s.densities.emplace(cls, trust_density(t));
  s.nts = net_trust_score(records, correct_only);
  return s;
}

// "0.926±.021" style: three decimals, leading zero dropped from the spread.
inline std::string mean_pm_std(std::span<const double> values) {
  if (values.empty()) return "n/a";
  const double m = mean(values);
  const double s = values.size() > 1 ? stddev(values) : 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", s);
  std::string spread = buf;
  if (spread.rfind("0.", 0) == 0) spread.erase(0, 1);
  std::snprintf(buf, sizeof buf, "%.3f", m);
  return std::string(buf) + "±" + spread;
}

}  // namespace skillfuse
