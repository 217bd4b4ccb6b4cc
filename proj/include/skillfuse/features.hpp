#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillfuse/common.hpp"

namespace skillfuse {

// T x C time-by-channel matrix with its sample rate and channel names.
struct SpatioTemporalMatrix {
  Matrix data;
  double sample_rate_hz = 1.0;
  std::vector<std::string> channel_names;
  Modality modality = Modality::neural;

  [[nodiscard]] std::size_t length() const noexcept { return data.rows(); }
  [[nodiscard]] std::size_t channels() const noexcept { return data.cols(); }

  void validate() const {
    if (data.rows() < 1 || data.cols() < 1) throw std::invalid_argument("SpatioTemporalMatrix: empty");
    if (channel_names.size() != data.cols())
      throw std::invalid_argument("SpatioTemporalMatrix: channel name count differs from column count");
    if (!(sample_rate_hz > 0)) throw std::invalid_argument("SpatioTemporalMatrix: sample rate must be positive");
    if (!data.all_finite()) throw std::invalid_argument("SpatioTemporalMatrix: non-finite entries");
  }
};

inline std::vector<std::string> numbered_names(std::string_view prefix, std::size_t n) {
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t i = 0; i < n; ++i) names.push_back(std::string(prefix) + std::to_string(i + 1));
  return names;
}

// One task execution.
struct TrialRecord {
  std::string trial_id;
  std::string subject_id;
  Task task = Task::pattern_cutting;
  int label = 0;  // 0 = Fail/Resident, 1 = Pass/Surgeon
  double score = 0.0;
  SpatioTemporalMatrix neural;
  SpatioTemporalMatrix motor;
};

// Sizes of `groups` contiguous groups over `n` channels, as equal as possible
// with the larger groups first.
inline std::vector<std::size_t> group_sizes(std::size_t n, std::size_t groups) {
  std::vector<std::size_t> sizes(groups, n / groups);
  for (std::size_t g = 0; g < n % groups; ++g) ++sizes[g];
  return sizes;
}

// Average pooling over the channel axis: T x D -> T x d_prime.
inline Matrix channel_group_gap(const Matrix& x, std::size_t d_prime) {
  if (d_prime < 1 || d_prime > x.cols())
    throw std::invalid_argument("channel_group_gap: d_prime must be in [1, D]");
  if (d_prime == x.cols()) return x;
  const auto sizes = group_sizes(x.cols(), d_prime);
  Matrix y(x.rows(), d_prime);
  for (std::size_t t = 0; t < x.rows(); ++t) {
    std::size_t c = 0;
    for (std::size_t g = 0; g < d_prime; ++g) {
      double s = 0.0;
      for (std::size_t k = 0; k < sizes[g]; ++k) s += x(t, c++);
      y(t, g) = s / static_cast<double>(sizes[g]);
    }
  }
  return y;
}

inline SpatioTemporalMatrix channel_group_gap(const SpatioTemporalMatrix& x, std::size_t d_prime) {
  SpatioTemporalMatrix out;
  out.data = channel_group_gap(x.data, d_prime);
  out.sample_rate_hz = x.sample_rate_hz;
  out.modality = x.modality;
  out.channel_names = d_prime == x.channels() ? x.channel_names : numbered_names("g", d_prime);
  return out;
}

// Channel concatenation (neural first) after truncating to the shorter length.
inline SpatioTemporalMatrix align_and_fuse(const SpatioTemporalMatrix& neural, const SpatioTemporalMatrix& motor) {
  if (neural.sample_rate_hz != motor.sample_rate_hz)
    throw std::invalid_argument("align_and_fuse: modalities must share a sample rate");
  const std::size_t t = std::min(neural.length(), motor.length());
  const std::size_t cn = neural.channels(), cm = motor.channels();
  SpatioTemporalMatrix out;
  out.data = Matrix(t, cn + cm);
  out.sample_rate_hz = neural.sample_rate_hz;
  out.modality = Modality::fused;
  for (std::size_t r = 0; r < t; ++r) {
    for (std::size_t c = 0; c < cn; ++c) out.data(r, c) = neural.data(r, c);
    for (std::size_t c = 0; c < cm; ++c) out.data(r, cn + c) = motor.data(r, c);
  }
  out.channel_names = neural.channel_names;
  out.channel_names.insert(out.channel_names.end(), motor.channel_names.begin(), motor.channel_names.end());
  return out;
}

// Model input for a modality from an aligned, normalized trial.
inline SpatioTemporalMatrix model_input(const TrialRecord& trial, Modality modality) {
  switch (modality) {
    case Modality::neural: return trial.neural;
    case Modality::motor: return trial.motor;
    case Modality::fused: return align_and_fuse(trial.neural, trial.motor);
  }
  throw std::invalid_argument("model_input: unknown modality");
}

}  // namespace skillfuse
