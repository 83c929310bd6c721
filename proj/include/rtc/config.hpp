// Experiment configuration: an INI document with [env], [model], [train]
// and [eval] sections. Every key maps onto a field of the module configs;
// unknown sections or keys are rejected.
#pragma once

#include "rtc/env.hpp"
#include "rtc/losses.hpp"
#include "rtc/nets.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace rtc {

struct ExperimentConfig {
  env::EpisodeConfig env;
  nets::NetConfig model;
  train::TrainConfig train;
  train::EvalConfig eval;

  void validate() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses INI text. Keys not present keep their defaults. Throws UsageError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Every key with its current value, in a fixed order.
std::string serialize_config(const ExperimentConfig& cfg);

/// Sets `section.key` from its text form. Throws UsageError for unknown
/// keys or malformed values.
void set_config_value(ExperimentConfig& cfg, std::string_view dotted_key, std::string_view value);

/// "section.key" for every known key.
std::vector<std::string> config_keys();

}  // namespace rtc
