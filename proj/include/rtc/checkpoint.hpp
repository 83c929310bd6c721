// Training checkpoints as JSON: parameters (shape + decimal payload), Adam
// moments, step counters, best-eval bookkeeping and the config echo.
// Doubles are written in shortest round-trip form, so save/load is bit-exact.
#pragma once

#include "rtc/trainer.hpp"

#include <cstdint>
#include <string>

namespace rtc {

struct Checkpoint {
  train::Algo algo = train::Algo::rtc;
  std::uint64_t seed = 0;
  std::string config_text;  // serialize_config output
  train::TrainState state;
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string checkpoint_to_json(const Checkpoint& c);
/// Throws IoError on malformed input.
Checkpoint checkpoint_from_json(std::string_view text);

void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint make_checkpoint(const train::Trainer& trainer);
/// Replaces the trainer's state after checking algo, seed and config agree
/// (train.steps may differ).
void restore(train::Trainer& trainer, const Checkpoint& c);

}  // namespace rtc
