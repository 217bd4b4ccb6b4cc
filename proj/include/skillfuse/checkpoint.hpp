#pragma once

// JSON model checkpoints; parameters round-trip bit-exactly.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skillfuse/nnet.hpp"

namespace skillfuse {

// Checkpoint schema: {"format", "version", "config", "layout", "parameters", ...}.
inline nlohmann::json config_to_json(const VbaNetConfig& c) {
  return {{"in_channels", c.in_channels},   {"conv_filters", c.conv_filters},
          {"kernel", c.kernel},             {"se_reduction", c.se_reduction},
          {"head", std::string(to_string(c.head))}, {"num_classes", c.num_classes},
          {"learning_rate", c.learning_rate}, {"max_epochs", c.max_epochs},
          {"patience", c.patience},         {"min_delta", c.min_delta},
          {"rng_seed", c.rng_seed}};
}

inline VbaNetConfig config_from_json(const nlohmann::json& j) {
  VbaNetConfig c;
  c.in_channels = j.at("in_channels").get<std::size_t>();
  c.conv_filters = j.at("conv_filters").get<std::size_t>();
  c.kernel = j.at("kernel").get<std::size_t>();
  c.se_reduction = j.at("se_reduction").get<std::size_t>();
  c.head = parse_head(j.at("head").get<std::string>());
  c.num_classes = j.at("num_classes").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.min_delta = j.at("min_delta").get<double>();
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  return c;
}

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json model_to_json(const TrainedModel& m) {
  nlohmann::json layout = nlohmann::json::array();
  const auto lay = make_layout(m.config);
  for (const auto& b : lay.blocks()) layout.push_back({{"name", b.name}, {"shape", b.shape}});
  return {{"format", "skillfuse-model"},
          {"version", kCheckpointVersion},
          {"config", config_to_json(m.config)},
          {"layout", layout},
          {"parameters", m.parameters},
          {"history", m.history},
          {"best_epoch", m.best_epoch},
          {"target_min", m.target_min},
          {"target_max", m.target_max}};
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "skillfuse-model") throw std::invalid_argument("checkpoint: unrecognized format");
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw std::invalid_argument("checkpoint: unsupported version");
  TrainedModel m;
  m.config = config_from_json(j.at("config"));
  m.parameters = j.at("parameters").get<std::vector<double>>();
  m.history = j.at("history").get<std::vector<double>>();
  m.best_epoch = j.at("best_epoch").get<std::size_t>();
  m.target_min = j.at("target_min").get<double>();
  m.target_max = j.at("target_max").get<double>();
  if (m.parameters.size() != make_layout(m.config).total())
    throw std::invalid_argument("checkpoint: parameter count does not match config");
  return m;
}

}  // namespace skillfuse
