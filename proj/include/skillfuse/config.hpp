#pragma once

// Run configuration: one JSON document covering every stage. Unknown keys and
// wrongly typed values are rejected; the materialized form lists every field.

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "skillfuse/contrastive.hpp"
#include "skillfuse/nnet.hpp"
#include "skillfuse/pipeline.hpp"
#include "skillfuse/synth.hpp"

namespace skillfuse {

class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DataPaths {
  std::string raw_manifest;       // synth output, preprocess input
  std::string prepared_manifest;  // preprocess output, train/assess/cam input
  std::string model;              // checkpoint for cam
};

struct NetSettings {
  std::size_t conv_filters = 64;
  std::size_t kernel = 3;
  std::size_t se_reduction = 8;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 5000;
  std::size_t patience = 10;
  double min_delta = 0.0;
};

struct FrameSettings {
  bool render = false;         // synth: write rendered frames as the motor stream
  std::size_t size = 32;       // rendered frame side
  std::size_t max_training_frames = 0;  // preprocess: 0 = train on every frame
};

struct RunConfig {
  std::uint64_t seed = 1;
  Task task = Task::pattern_cutting;
  Modality modality = Modality::fused;
  HeadKind head = HeadKind::classify;
  DataPaths data;
  SynthConfig synth;
  FrameSettings frames;
  PreprocessConfig preprocess;
  BackboneConfig contrastive;
  NetSettings nnet;
  std::size_t iterations = 100;
  std::size_t jobs = 1;
  bool correct_only = false;
  std::size_t cam_class = 1;
  std::size_t cam_length = 100;

  // Network settings for a dataset with `in_channels` input channels.
  [[nodiscard]] VbaNetConfig net_config(std::size_t in_channels) const {
    VbaNetConfig c;
    c.in_channels = in_channels;
    c.conv_filters = nnet.conv_filters;
    c.kernel = nnet.kernel;
    c.se_reduction = nnet.se_reduction;
    c.head = head;
    c.learning_rate = nnet.learning_rate;
    c.max_epochs = nnet.max_epochs;
    c.patience = nnet.patience;
    c.min_delta = nnet.min_delta;
    c.rng_seed = seed;
    return c;
  }

  // Synth settings with the run's task and seed applied.
  [[nodiscard]] SynthConfig synth_config() const {
    SynthConfig s = synth;
    s.task = task;
    s.rng_seed = seed;
    return s;
  }

  [[nodiscard]] BackboneConfig backbone_config() const {
    BackboneConfig b = contrastive;
    b.rng_seed = derive_seed(seed, 0xBAC);
    return b;
  }

  void validate() const {
    try {
      synth_config().validate();
      backbone_config().validate();
      net_config(1).validate();
      preprocess.mbll.validate();
    } catch (const std::exception& e) {
      throw config_error(e.what());
    }
    if (iterations < 2) throw config_error("assess.iterations must be >= 2");
    if (jobs < 1) throw config_error("assess.jobs must be >= 1");
    if (cam_length < 2) throw config_error("cam.length must be >= 2");
    if (frames.size < kMinFrameSide) throw config_error("synth.frames.size must be >= 8");
    if (preprocess.motion.passes < 0) throw config_error("preprocess.motion.passes must be >= 0");
    if (!(preprocess.target_hz > 0)) throw config_error("preprocess.target_hz must be positive");
    if (!(preprocess.baseline_s > 0)) throw config_error("preprocess.baseline_s must be positive");
  }
};

namespace detail {

// Reads known keys of one JSON object and rejects whatever is left over.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw config_error(where() + "must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw config_error("");
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!it->is_number_integer() || it->template get<long long>() < 0) throw config_error("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw config_error("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw config_error("");
      }
      out = it->get<T>();
    } catch (const std::exception&) {
      throw config_error(where() + key + " has the wrong type");
    }
  }

  template <typename Enum, typename Parse>
  void read_enum(const char* key, Enum& out, Parse parse) {
    std::string s;
    read(key, s);
    if (j_.contains(key)) {
      try {
        out = parse(s);
      } catch (const std::invalid_argument& e) {
        throw config_error(where() + key + ": " + e.what());
      }
    }
  }

  // Child object (absent = all defaults).
  [[nodiscard]] ObjectReader child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return {it == j_.end() ? empty() : *it, path_ + key + "."};
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw config_error("unknown configuration key '" + path_ + k + "'");
  }

 private:
  static const nlohmann::json& empty() {
    static const nlohmann::json e = nlohmann::json::object();
    return e;
  }
  [[nodiscard]] std::string where() const { return path_.empty() ? "" : path_; }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j, RunConfig c = {}) {
  detail::ObjectReader root(j, "");
  root.read("seed", c.seed);
  const Task base_task = c.task;
  root.read_enum("task", c.task, parse_task);
  if (c.task != base_task) {  // task-tied synth defaults; explicit synth keys still win
    const auto d = SynthConfig::for_task(c.task);
    c.synth.channels_neural = d.channels_neural;
    c.synth.fs_neural = d.fs_neural;
  }
  root.read_enum("modality", c.modality, parse_modality);
  root.read_enum("head", c.head, parse_head);
  {
    auto d = root.child("data");
    d.read("raw_manifest", c.data.raw_manifest);
    d.read("prepared_manifest", c.data.prepared_manifest);
    d.read("model", c.data.model);
    d.finish();
  }
  {
    auto s = root.child("synth");
    s.read("n_subjects", c.synth.n_subjects);
    s.read("trials_per_subject", c.synth.trials_per_subject);
    s.read("separation", c.synth.separation);
    s.read("channels_neural", c.synth.channels_neural);
    s.read("channels_motor", c.synth.channels_motor);
    s.read("duration_min_s", c.synth.duration_min_s);
    s.read("duration_max_s", c.synth.duration_max_s);
    s.read("fs_neural", c.synth.fs_neural);
    s.read("fs_motor", c.synth.fs_motor);
    s.read("artifact_rate_per_min", c.synth.artifact_rate_per_min);
    s.read("positive_fraction", c.synth.positive_fraction);
    s.read("modality_split", c.synth.modality_split);
    auto f = s.child("frames");
    f.read("render", c.frames.render);
    f.read("size", c.frames.size);
    f.finish();
    s.finish();
  }
  {
    auto p = root.child("preprocess");
    p.read("baseline_s", c.preprocess.baseline_s);
    p.read("target_hz", c.preprocess.target_hz);
    p.read("motor_groups", c.preprocess.motor_groups);
    auto b = p.child("bandpass");
    b.read("low_hz", c.preprocess.bandpass.low_hz);
    b.read("high_hz", c.preprocess.bandpass.high_hz);
    b.read("order", c.preprocess.bandpass.order);
    b.finish();
    auto m = p.child("motion");
    m.read("passes", c.preprocess.motion.passes);
    m.read("detect_window_s", c.preprocess.motion.detect_window_s);
    m.read("detect_k", c.preprocess.motion.detect_k);
    m.read("smoothing", c.preprocess.motion.smoothing);
    m.finish();
    auto l = p.child("mbll");
    l.read("extinction", c.preprocess.mbll.extinction);
    l.read("dpf", c.preprocess.mbll.dpf);
    l.read("distance_mm", c.preprocess.mbll.distance_mm);
    l.finish();
    p.finish();
  }
  {
    auto b = root.child("contrastive");
    b.read("feature_dim", c.contrastive.feature_dim);
    b.read("projection_dim", c.contrastive.projection_dim);
    b.read("temperature", c.contrastive.temperature);
    b.read("batch_size", c.contrastive.batch_size);
    b.read("epochs", c.contrastive.epochs);
    b.read("patience", c.contrastive.patience);
    b.read("min_delta", c.contrastive.min_delta);
    b.read("learning_rate", c.contrastive.learning_rate);
    b.read("conv1_channels", c.contrastive.conv1_channels);
    b.read("conv2_channels", c.contrastive.conv2_channels);
    b.read("validation_fraction", c.contrastive.validation_fraction);
    b.read("max_training_frames", c.frames.max_training_frames);
    auto a = b.child("augment");
    a.read("crop_size", c.contrastive.augment.crop_size);
    a.read("scale_min", c.contrastive.augment.scale_min);
    a.read("scale_max", c.contrastive.augment.scale_max);
    a.read("ratio_min", c.contrastive.augment.ratio_min);
    a.read("ratio_max", c.contrastive.augment.ratio_max);
    a.read("brightness", c.contrastive.augment.brightness);
    a.read("contrast", c.contrastive.augment.contrast);
    a.read("blur_sigma_min", c.contrastive.augment.blur_sigma_min);
    a.read("blur_sigma_max", c.contrastive.augment.blur_sigma_max);
    a.read("flip_p", c.contrastive.augment.flip_p);
    a.read("gray_p", c.contrastive.augment.gray_p);
    a.finish();
    b.finish();
  }
  {
    auto n = root.child("nnet");
    n.read("conv_filters", c.nnet.conv_filters);
    n.read("kernel", c.nnet.kernel);
    n.read("se_reduction", c.nnet.se_reduction);
    n.read("learning_rate", c.nnet.learning_rate);
    n.read("max_epochs", c.nnet.max_epochs);
    n.read("patience", c.nnet.patience);
    n.read("min_delta", c.nnet.min_delta);
    n.finish();
  }
  {
    auto a = root.child("assess");
    a.read("iterations", c.iterations);
    a.read("jobs", c.jobs);
    a.finish();
  }
  {
    auto t = root.child("trust");
    t.read("correct_only", c.correct_only);
    t.finish();
  }
  {
    auto m = root.child("cam");
    m.read("class_index", c.cam_class);
    m.read("length", c.cam_length);
    m.finish();
  }
  root.finish();
  c.validate();
  return c;
}

inline nlohmann::json run_config_to_json(const RunConfig& c) {
  const auto& s = c.synth;
  const auto& p = c.preprocess;
  const auto& b = c.contrastive;
  const auto& a = b.augment;
  nlohmann::json j;
  j["seed"] = c.seed;
  j["task"] = std::string(to_string(c.task));
  j["modality"] = std::string(to_string(c.modality));
  j["head"] = std::string(to_string(c.head));
  j["data"] = {{"raw_manifest", c.data.raw_manifest},
               {"prepared_manifest", c.data.prepared_manifest},
               {"model", c.data.model}};
  j["synth"] = {{"n_subjects", s.n_subjects},
                {"trials_per_subject", s.trials_per_subject},
                {"separation", s.separation},
                {"channels_neural", s.channels_neural},
                {"channels_motor", s.channels_motor},
                {"duration_min_s", s.duration_min_s},
                {"duration_max_s", s.duration_max_s},
                {"fs_neural", s.fs_neural},
                {"fs_motor", s.fs_motor},
                {"artifact_rate_per_min", s.artifact_rate_per_min},
                {"positive_fraction", s.positive_fraction},
                {"modality_split", s.modality_split},
                {"frames", {{"render", c.frames.render}, {"size", c.frames.size}}}};
  j["preprocess"] = {
      {"baseline_s", p.baseline_s},
      {"target_hz", p.target_hz},
      {"motor_groups", p.motor_groups},
      {"bandpass", {{"low_hz", p.bandpass.low_hz}, {"high_hz", p.bandpass.high_hz}, {"order", p.bandpass.order}}},
      {"motion",
       {{"passes", p.motion.passes},
        {"detect_window_s", p.motion.detect_window_s},
        {"detect_k", p.motion.detect_k},
        {"smoothing", p.motion.smoothing}}},
      {"mbll", {{"extinction", p.mbll.extinction}, {"dpf", p.mbll.dpf}, {"distance_mm", p.mbll.distance_mm}}}};
  j["contrastive"] = {{"feature_dim", b.feature_dim},
                      {"projection_dim", b.projection_dim},
                      {"temperature", b.temperature},
                      {"batch_size", b.batch_size},
                      {"epochs", b.epochs},
                      {"patience", b.patience},
                      {"min_delta", b.min_delta},
                      {"learning_rate", b.learning_rate},
                      {"conv1_channels", b.conv1_channels},
                      {"conv2_channels", b.conv2_channels},
                      {"validation_fraction", b.validation_fraction},
                      {"max_training_frames", c.frames.max_training_frames},
                      {"augment",
                       {{"crop_size", a.crop_size},
                        {"scale_min", a.scale_min},
                        {"scale_max", a.scale_max},
                        {"ratio_min", a.ratio_min},
                        {"ratio_max", a.ratio_max},
                        {"brightness", a.brightness},
                        {"contrast", a.contrast},
                        {"blur_sigma_min", a.blur_sigma_min},
                        {"blur_sigma_max", a.blur_sigma_max},
                        {"flip_p", a.flip_p},
                        {"gray_p", a.gray_p}}}};
  j["nnet"] = {{"conv_filters", c.nnet.conv_filters}, {"kernel", c.nnet.kernel},
               {"se_reduction", c.nnet.se_reduction}, {"learning_rate", c.nnet.learning_rate},
               {"max_epochs", c.nnet.max_epochs},     {"patience", c.nnet.patience},
               {"min_delta", c.nnet.min_delta}};
  j["assess"] = {{"iterations", c.iterations}, {"jobs", c.jobs}};
  j["trust"] = {{"correct_only", c.correct_only}};
  j["cam"] = {{"class_index", c.cam_class}, {"length", c.cam_length}};
  return j;
}

}  // namespace skillfuse
