#pragma once

#include "rtc/config.hpp"

namespace rtc::testing {

/// A few seconds of training for any algorithm.
inline ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.model.hidden = 8;
  c.model.disc_embed = 6;
  c.model.encoder_embed = 6;
  c.model.pos_embed_dim = 4;
  c.train.steps = 20;
  c.train.batch_size = 8;
  c.train.dataset_size = 40;
  c.eval.every = 10;
  c.eval.episodes = 40;
  c.eval.ade_episodes = 4;
  c.eval.ade_k = 2;
  c.eval.chunk = 16;
  return c;
}

}  // namespace rtc::testing
