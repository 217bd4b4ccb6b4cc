#pragma once

// Class activation maps over the trial timeline and Spearman comparison.

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "skillfuse/nnet.hpp"
#include "skillfuse/stats.hpp"

namespace skillfuse {

// cam(t) = sum_k w[k] * maps(t, k)
inline std::vector<double> weighted_maps(const Matrix& maps, std::span<const double> w) {
  if (w.size() != maps.cols()) throw std::invalid_argument("cam: weight count does not match feature maps");
  std::vector<double> cam(maps.rows(), 0.0);
  for (std::size_t t = 0; t < maps.rows(); ++t) {
    const auto r = maps.row(t);
    for (std::size_t k = 0; k < w.size(); ++k) cam[t] += w[k] * r[k];
  }
  return cam;
}

// Head weights of `class_index` (the single output for a regression head).
inline std::span<const double> head_weights(const TrainedModel& model, std::size_t class_index) {
  if (class_index >= model.config.outputs()) throw std::invalid_argument("cam: class index out of range");
  const auto layout = make_layout(model.config);
  const auto w = layout.view(std::span<const double>(model.parameters), "head.w");
  const std::size_t F = model.config.conv_filters;
  return w.subspan(class_index * F, F);
}

inline std::vector<double> compute_cam(const TrainedModel& model, const Matrix& x, std::size_t class_index) {
  const auto w = head_weights(model, class_index);
  const SkillNet net(model.config);
  return weighted_maps(net.feature_maps(model.parameters, x), w);
}

struct CamCurve {
  std::vector<double> values;
  std::size_t class_index = 0;
  Modality modality = Modality::fused;
  std::size_t n_trials_averaged = 1;
};

inline constexpr std::size_t kCamLength = 100;

// Min-max to [0, 1] (constant -> 0.5), then linear resampling to L points
// spanning the whole trial.
inline std::vector<double> normalize_resample_cam(std::span<const double> cam, std::size_t L = kCamLength) {
  if (cam.size() < 2) throw std::invalid_argument("normalize_resample_cam: need at least 2 samples");
  if (L < 2) throw std::invalid_argument("normalize_resample_cam: L must be at least 2");
  const auto [lo_it, hi_it] = std::minmax_element(cam.begin(), cam.end());
  const double lo = *lo_it, span = *hi_it - lo;
  std::vector<double> norm(cam.size());
  for (std::size_t i = 0; i < cam.size(); ++i) norm[i] = span > 0 ? (cam[i] - lo) / span : 0.5;
  if (L == cam.size()) return norm;
  std::vector<double> out(L);
  const double scale = static_cast<double>(cam.size() - 1) / static_cast<double>(L - 1);
  for (std::size_t j = 0; j < L; ++j) {
    const double pos = static_cast<double>(j) * scale;
    const auto i = std::min(static_cast<std::size_t>(pos), cam.size() - 2);
    const double f = pos - static_cast<double>(i);
    out[j] = norm[i] + f * (norm[i + 1] - norm[i]);
  }
  return out;
}

inline std::vector<double> average_curves(std::span<const std::vector<double>> curves) {
  if (curves.empty()) throw std::invalid_argument("average_curves: no curves");
  std::vector<double> avg(curves.front().size(), 0.0);
  for (const auto& c : curves) {
    if (c.size() != avg.size()) throw std::invalid_argument("average_curves: length mismatch");
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += c[i];
  }
  for (double& v : avg) v /= static_cast<double>(curves.size());
  return avg;
}

// Pearson correlation of mid-ranks; nullopt when undefined.
inline std::optional<double> spearman_rho(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 3) return std::nullopt;
  const auto ra = detail::mid_ranks(a), rb = detail::mid_ranks(b);
  const double ma = mean(ra), mb = mean(rb);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace skillfuse
