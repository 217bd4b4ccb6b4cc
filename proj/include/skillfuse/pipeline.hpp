#pragma once

// Raw trial streams to aligned, normalized model inputs.
//
// Neural: intensity -> OD -> band-pass -> spline motion correction -> MBLL
// (HbO kept) -> 1 Hz -> min-max. Motor: 1 Hz -> channel-group GAP -> min-max.
// Video frames reach the motor path through a contrastive backbone.

#include <stdexcept>
#include <vector>

#include "skillfuse/contrastive.hpp"
#include "skillfuse/features.hpp"
#include "skillfuse/signal.hpp"
#include "skillfuse/synth.hpp"

namespace skillfuse {

struct PreprocessConfig {
  double baseline_s = 5.0;
  BandpassParams bandpass;
  MotionCorrectionParams motion;
  MbllParams mbll;
  double target_hz = 1.0;
  std::size_t motor_groups = 0;  // D'; 0 = match the neural channel count
};

inline SpatioTemporalMatrix preprocess_neural(const std::vector<IntensitySeries>& channels, const PreprocessConfig& cfg) {
  if (channels.empty()) throw std::invalid_argument("preprocess_neural: no channels");
  const double fs = channels.front().sample_rate_hz;
  const std::size_t T = channels.front().samples.rows();
  Matrix hbo(T, channels.size());
  std::vector<std::string> names;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const auto& ch = channels[c];
    if (ch.sample_rate_hz != fs || ch.samples.rows() != T)
      throw std::invalid_argument("preprocess_neural: channels differ in rate or length");
    auto od = optical_density(ch, leading_window(T, fs, cfg.baseline_s));
    od.samples = bandpass_filter(od.samples, fs, cfg.bandpass);
    od.samples = spline_motion_correct(od.samples, fs, cfg.motion);
    const auto hb = mbll_convert(od, cfg.mbll);
    hbo.set_col(c, hb.delta_hbo);
    names.push_back(ch.channel_id.empty() ? "hbo" + std::to_string(c + 1) : ch.channel_id);
  }
  auto rs = resample_uniform(hbo, fs, cfg.target_hz);
  return {minmax_normalize(rs.data), rs.sample_rate_hz, std::move(names), Modality::neural};
}

inline SpatioTemporalMatrix preprocess_motor(const SpatioTemporalMatrix& raw, std::size_t groups,
                                             const PreprocessConfig& cfg) {
  raw.validate();
  auto rs = resample_uniform(raw.data, raw.sample_rate_hz, cfg.target_hz);
  SpatioTemporalMatrix m{std::move(rs.data), rs.sample_rate_hz, raw.channel_names, Modality::motor};
  m = channel_group_gap(m, groups);
  m.data = minmax_normalize(m.data);
  return m;
}

// Per-frame backbone features in temporal order, as a raw motor stream.
inline SpatioTemporalMatrix motor_from_frames(const Backbone& backbone, std::span<const Frame> frames, double fps) {
  if (frames.empty()) throw std::invalid_argument("motor_from_frames: no frames");
  if (!(fps > 0)) throw std::invalid_argument("motor_from_frames: fps must be positive");
  auto feats = extract_features(backbone, frames);
  auto names = numbered_names("fb", feats.cols());
  return {std::move(feats), fps, std::move(names), Modality::motor};
}

inline TrialRecord prepare_trial(const SynthTrial& raw, const PreprocessConfig& cfg) {
  TrialRecord r;
  r.trial_id = raw.trial_id;
  r.subject_id = raw.subject_id;
  r.task = raw.task;
  r.label = raw.label;
  r.score = raw.score;
  r.neural = preprocess_neural(raw.neural, cfg);
  r.motor = preprocess_motor(raw.motor, cfg.motor_groups ? cfg.motor_groups : r.neural.channels(), cfg);
  return r;
}

}  // namespace skillfuse
