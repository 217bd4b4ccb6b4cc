#pragma once

// Synthetic trials with class- and score-structured neural-like intensities and
// motor-like feature streams.
//
// Each subject draws one latent skill. A trial's skill adds a small practice
// jitter; the label thresholds that noise-free trial skill at zero and the
// score is affine in it. A per-trial split shifts the skill drive up in one
// modality and down in the other, so each stream alone sees a distorted skill
// and only the pair recovers it. Skill is expressed in signal shape (evoked
// amplitude against a fixed respiratory background, trajectory smoothness)
// rather than raw scale, because every trial is min-max normalized downstream.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillfuse/common.hpp"
#include "skillfuse/contrastive.hpp"
#include "skillfuse/features.hpp"
#include "skillfuse/random.hpp"
#include "skillfuse/signal.hpp"

namespace skillfuse {

inline constexpr double kPatternCuttingFsHz = 7.8125;
inline constexpr double kSuturingFsHz = 5.0863;

struct SynthConfig {
  std::size_t n_subjects = 8;
  std::size_t trials_per_subject = 10;
  Task task = Task::pattern_cutting;
  double separation = 3.0;
  std::size_t channels_neural = 6;
  std::size_t channels_motor = 12;
  double duration_min_s = 45.0;
  double duration_max_s = 75.0;
  double fs_neural = kPatternCuttingFsHz;
  double fs_motor = 30.0;
  double artifact_rate_per_min = 1.0;
  double positive_fraction = 0.5;  // share of subjects in the positive class
  double modality_split = 0.6;  // std of the drive shift between modalities
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (n_subjects < 2) throw std::invalid_argument("SynthConfig: need at least 2 subjects");
    if (trials_per_subject < 1) throw std::invalid_argument("SynthConfig: need at least 1 trial per subject");
    if (!(separation >= 0)) throw std::invalid_argument("SynthConfig: separation must be >= 0");
    if (channels_neural < 1 || channels_motor < 1) throw std::invalid_argument("SynthConfig: channel counts must be >= 1");
    if (!(duration_min_s >= 10.0) || !(duration_max_s >= duration_min_s))
      throw std::invalid_argument("SynthConfig: durations must satisfy 10 <= min <= max");
    if (!(fs_neural > 1.0) || !(fs_motor >= 1.0)) throw std::invalid_argument("SynthConfig: sample rates too low");
    if (!(artifact_rate_per_min >= 0)) throw std::invalid_argument("SynthConfig: artifact rate must be >= 0");
    if (!(positive_fraction > 0 && positive_fraction < 1))
      throw std::invalid_argument("SynthConfig: positive_fraction must be in (0, 1)");
    if (!(modality_split >= 0)) throw std::invalid_argument("SynthConfig: modality_split must be >= 0");
  }

  // Defaults tied to the task: six channels at 7.8125 Hz or eight at 5.0863 Hz.
  static SynthConfig for_task(Task t) {
    SynthConfig c;
    c.task = t;
    if (t == Task::suturing) {
      c.channels_neural = 8;
      c.fs_neural = kSuturingFsHz;
    }
    return c;
  }
};

struct SynthTrial {
  std::string trial_id;
  std::string subject_id;
  Task task = Task::pattern_cutting;
  int label = 0;
  double score = 0.0;
  double skill = 0.0;        // noise-free trial skill
  double motor_drive = 0.0;  // skill drive behind the motor stream
  std::vector<IntensitySeries> neural;  // one two-wavelength series per channel
  SpatioTemporalMatrix motor;           // raw feature stream at fs_motor
};

namespace detail {

// Physiological background amplitudes in micromolar.
inline constexpr double kNoiseUm = 0.05;
inline constexpr double kRespirationUm = 0.12;

// Gamma kernel (shape 6, scale 0.9 s) scaled to unit peak.
inline double gamma_response(double t) {
  constexpr double k = 6.0, theta = 0.9;
  if (t <= 0) return 0.0;
  const double peak_t = (k - 1.0) * theta;
  const auto g = [&](double x) { return std::pow(x, k - 1.0) * std::exp(-x / theta); };
  return g(t) / g(peak_t);
}

// Sum of AR(1) processes at several time constants: a cheap 1/f-like noise
// whose fast component keeps in-band power after filtering.
inline std::vector<double> pink_noise(std::size_t n, double fs, double sigma, Rng& rng) {
  constexpr double taus[] = {0.7, 4.0, 30.0};
  constexpr double weights[] = {1.0, 0.3, 0.2};
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < 3; ++j) {
    const double a = std::exp(-1.0 / (taus[j] * fs));
    const double innov = std::sqrt(1.0 - a * a);
    double s = rng.normal();
    for (std::size_t i = 0; i < n; ++i) {
      s = a * s + innov * rng.normal();
      out[i] += s * sigma * weights[j];
    }
  }
  return out;
}

inline double score_center(Task t) { return t == Task::pattern_cutting ? 200.0 : 20.0; }
inline double score_scale(Task t) { return t == Task::pattern_cutting ? 40.0 : 4.0; }

}  // namespace detail

inline std::string trial_name(std::size_t subject, std::size_t trial) {
  return "s" + std::to_string(subject + 1) + "_t" + std::to_string(trial + 1);
}

inline std::vector<std::string> intensity_column_names(std::size_t channels) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < channels; ++c)
    for (double wl : kDefaultWavelengthsNm)
      names.push_back("ch" + std::to_string(c + 1) + "_" + std::to_string(static_cast<int>(wl)));
  return names;
}

// One trial for a subject with latent skill `subject_skill`.
inline SynthTrial generate_trial(double subject_skill, const SynthConfig& cfg, Rng& rng) {
  cfg.validate();
  SynthTrial tr;
  tr.task = cfg.task;
  tr.skill = subject_skill + 0.25 * rng.normal();
  tr.label = tr.skill > 0.0 ? 1 : 0;
  tr.score = detail::score_center(cfg.task) + detail::score_scale(cfg.task) * tr.skill +
             0.05 * detail::score_scale(cfg.task) * rng.normal();

  // Skill drive as seen by each modality: with latent classes at -1 and +1 the
  // class means differ by `separation`, about one within-class spread per unit.
  const double drive = 0.5 * cfg.separation * tr.skill;
  const double split = cfg.modality_split * rng.normal();
  const double drive_neural = drive + split;
  const double drive_motor = drive - split;
  tr.motor_drive = drive_motor;
  const double duration = rng.uniform(cfg.duration_min_s, cfg.duration_max_s);

  // Neural: shared evoked events, channel gains, pink noise, respiration and
  // cardiac ripple, drift and motion spikes, mapped to intensities through the
  // forward model. Evoked amplitude carries the skill; the steady respiratory
  // wave sets the level the motion detector treats as normal.
  const double fs = cfg.fs_neural;
  const auto tn = static_cast<std::size_t>(std::floor(duration * fs)) + 1;
  const double rate_hz = 1.0 / 10.0;
  const double amplitude_um = 0.25 * std::exp(1.2 * drive_neural);
  auto wait = [&](double per_s) { return -std::log(1.0 - rng.uniform()) / per_s; };
  std::vector<double> onsets;
  double t_event = -6.0 * rng.uniform();  // events may start before the recording
  for (t_event += wait(rate_hz); t_event < duration; t_event += wait(rate_hz)) onsets.push_back(t_event);
  std::vector<double> evoked(tn, 0.0);
  for (std::size_t i = 0; i < tn; ++i) {
    const double t = static_cast<double>(i) / fs;
    for (double on : onsets) evoked[i] += detail::gamma_response(t - on);
  }

  std::vector<std::pair<std::size_t, std::size_t>> spikes;  // shared across channels (head motion)
  if (cfg.artifact_rate_per_min > 0) {
    const double per_s = cfg.artifact_rate_per_min / 60.0;
    for (double t = wait(per_s); t < duration; t += wait(per_s)) {
      const auto start = static_cast<std::size_t>(t * fs);
      const auto len = static_cast<std::size_t>(rng.uniform(0.3, 1.0) * fs) + 1;
      spikes.emplace_back(start, std::min(tn, start + len));
    }
  }

  const MbllParams mbll;
  const double resp_hz = rng.uniform(0.2, 0.3);
  tr.neural.reserve(cfg.channels_neural);
  for (std::size_t c = 0; c < cfg.channels_neural; ++c) {
    const double gain = rng.uniform(0.6, 1.4);
    const auto noise = detail::pink_noise(tn, fs, detail::kNoiseUm, rng);
    const double cardiac_phase = rng.uniform(0.0, 6.283185307179586);
    const double resp_phase = rng.uniform(0.0, 6.283185307179586);
    const double drift = rng.normal(0.0, 0.004) / duration;
    std::vector<double> spike_od(tn, 0.0);
    for (auto [b, e] : spikes) {
      double mag = rng.uniform(0.01, 0.02);
      if (rng.bernoulli(0.5)) mag = -mag;
      for (std::size_t i = b; i < e; ++i)
        spike_od[i] += mag * std::sin(3.141592653589793 * static_cast<double>(i - b) / static_cast<double>(e - b));
    }
    IntensitySeries s{Matrix(tn, 2), fs, {kDefaultWavelengthsNm[0], kDefaultWavelengthsNm[1]},
                      "ch" + std::to_string(c + 1)};
    const double base[2] = {rng.uniform(5e3, 2e4), rng.uniform(5e3, 2e4)};
    for (std::size_t i = 0; i < tn; ++i) {
      const double t = static_cast<double>(i) / fs;
      const double resp = detail::kRespirationUm * std::sin(6.283185307179586 * resp_hz * t + resp_phase);
      const double cardiac = 0.15 * std::sin(6.911503837897544 * t + cardiac_phase);
      const double hbo = gain * amplitude_um * evoked[i] + noise[i] + resp + cardiac;
      const double hbr = -0.3 * gain * amplitude_um * evoked[i] - 0.3 * noise[i];
      for (std::size_t w = 0; w < 2; ++w) {
        const double od = mbll.forward(w, hbo, hbr) + drift * t + spike_od[i] + 5e-4 * rng.normal();
        s.samples(i, w) = base[w] * std::pow(10.0, -od);
      }
    }
    tr.neural.push_back(std::move(s));
  }

  // Motor: smooth latent trajectories mixed into feature channels; skilled
  // motion is smoother (longer velocity memory) with less jitter.
  const double fm = cfg.fs_motor;
  const auto tm = static_cast<std::size_t>(std::floor(duration * fm)) + 1;
  const double tau_s = 0.8 * std::exp(1.1 * drive_motor);
  const double jitter = 0.6 * std::exp(-1.1 * drive_motor);
  constexpr std::size_t kLatent = 3;
  Matrix paths(tm, kLatent);
  const double a = std::exp(-1.0 / (tau_s * fm));
  for (std::size_t k = 0; k < kLatent; ++k) {
    double v = 0.0, x = 0.0;
    for (std::size_t i = 0; i < tm; ++i) {
      v = a * v + std::sqrt(1.0 - a * a) * rng.normal();
      x += v / fm;
      paths(i, k) = x;
    }
  }
  tr.motor = {Matrix(tm, cfg.channels_motor), fm, numbered_names("f", cfg.channels_motor), Modality::motor};
  // The feature extractor is shared by all trials, so the mixing is fixed per dataset.
  Rng mix_rng(derive_seed(cfg.rng_seed, 0x313C));
  for (std::size_t c = 0; c < cfg.channels_motor; ++c) {
    double w[kLatent];
    for (double& v : w) v = mix_rng.normal();
    const double offset = mix_rng.normal();
    for (std::size_t i = 0; i < tm; ++i) {
      double s = offset;
      for (std::size_t k = 0; k < kLatent; ++k) s += w[k] * paths(i, k);
      tr.motor.data(i, c) = s + jitter * rng.normal();
    }
  }
  return tr;
}

// Video-like frames of a disc-tipped tool moving with the same kinematics as
// the motor stream, one frame per second. Each frame integrates 0.2 s of
// motion, so jittery low-drive movement renders as a blurred tip.
inline std::vector<Frame> render_motion_frames(double motor_drive, double duration_s, std::size_t size, Rng& rng) {
  if (size < kMinFrameSide) throw std::invalid_argument("render_motion_frames: size must be >= 8");
  if (!(duration_s >= 1.0)) throw std::invalid_argument("render_motion_frames: duration must be >= 1 s");
  constexpr double kStep = 1.0 / 30.0;
  constexpr std::size_t kBlurSteps = 6;
  const double tau_s = 0.8 * std::exp(1.1 * motor_drive);
  const double jitter = 0.08 * std::exp(-1.1 * motor_drive);
  const double a = std::exp(-kStep / tau_s);
  const double side = static_cast<double>(size);
  double px = 0.5, py = 0.5, vx = 0, vy = 0;
  auto advance = [&] {
    vx = a * vx + std::sqrt(1 - a * a) * rng.normal();
    vy = a * vy + std::sqrt(1 - a * a) * rng.normal();
    px += 0.15 * vx * kStep;
    py += 0.15 * vy * kStep;
    // reflect at the borders of the working area
    if (px < 0.15 || px > 0.85) {
      vx = -vx;
      px = std::clamp(px, 0.15, 0.85);
    }
    if (py < 0.15 || py > 0.85) {
      vy = -vy;
      py = std::clamp(py, 0.15, 0.85);
    }
  };
  const auto n = static_cast<std::size_t>(std::floor(duration_s));
  std::vector<Frame> frames;
  frames.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (int k = 0; k < 30 - static_cast<int>(kBlurSteps); ++k) advance();
    Frame f(size, size);
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const double g = 0.25 + 0.15 * static_cast<double>(y) / side;
        f.at(y, x, 0) = g;
        f.at(y, x, 1) = g + 0.05;
        f.at(y, x, 2) = g + 0.2;
      }
    for (std::size_t k = 0; k < kBlurSteps; ++k) {
      advance();
      const double tx = (px + jitter * rng.normal()) * side;
      const double ty = (py + jitter * rng.normal()) * side;
      const double w = 1.0 / static_cast<double>(kBlurSteps);
      for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
          const double dx = static_cast<double>(x) + 0.5 - tx, dy = static_cast<double>(y) + 0.5 - ty;
          const double tip = std::clamp(2.5 - std::sqrt(dx * dx + dy * dy), 0.0, 1.0);
          // shaft from the tip to the lower right corner
          const double ex = side - tx, ey = side - ty;
          const double t = std::clamp((dx * ex + dy * ey) / (ex * ex + ey * ey + 1e-12), 0.0, 1.0);
          const double sx = dx - t * ex, sy = dy - t * ey;
          const double shaft = std::clamp(1.2 - std::sqrt(sx * sx + sy * sy), 0.0, 1.0);
          f.at(y, x, 0) += w * (tip * 0.65 + shaft * 0.5);
          f.at(y, x, 1) += w * (tip * 0.15 + shaft * 0.45);
          f.at(y, x, 2) += w * (tip * -0.2 + shaft * 0.3);
        }
    }
    for (double& v : f.pixels) v = std::clamp(v + 0.02 * rng.normal(), 0.0, 1.0);
    frames.push_back(std::move(f));
  }
  return frames;
}

inline std::vector<double> subject_skills(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.rng_seed, 0xA11CE));
  auto n_pos = static_cast<std::size_t>(std::llround(cfg.positive_fraction * static_cast<double>(cfg.n_subjects)));
  n_pos = std::clamp<std::size_t>(n_pos, 1, cfg.n_subjects - 1);
  std::vector<int> cls(cfg.n_subjects, 0);
  std::fill_n(cls.begin(), n_pos, 1);
  rng.shuffle(cls.begin(), cls.end());
  std::vector<double> skills(cfg.n_subjects);
  for (std::size_t s = 0; s < cfg.n_subjects; ++s) skills[s] = (cls[s] ? 1.0 : -1.0) + 0.3 * rng.normal();
  return skills;
}

// n_subjects x trials_per_subject trials, subject-major order. Each trial has
// its own derived seed so trials can be generated independently.
inline std::vector<SynthTrial> generate_dataset(const SynthConfig& cfg) {
  const auto skills = subject_skills(cfg);
  std::vector<SynthTrial> out;
  out.reserve(cfg.n_subjects * cfg.trials_per_subject);
  for (std::size_t s = 0; s < cfg.n_subjects; ++s)
    for (std::size_t t = 0; t < cfg.trials_per_subject; ++t) {
      Rng rng(derive_seed(cfg.rng_seed, s * cfg.trials_per_subject + t));
      auto tr = generate_trial(skills[s], cfg, rng);
      tr.trial_id = trial_name(s, t);
      tr.subject_id = "s" + std::to_string(s + 1);
      out.push_back(std::move(tr));
    }
  return out;
}

}  // namespace skillfuse
