// The training loop for every algorithm, its learning-curve record and the
// evaluation rollouts used at each eval point.
#pragma once

#include "rtc/config.hpp"
#include "rtc/metrics.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace rtc::train {

/// Per-step loss components. loss_rec holds the BC term for bc/mgail/infomgail;
/// loss_kl holds the posterior NLL for infomgail.
struct LossRecord {
  double total = 0.0;
  double rec = 0.0;
  double kl = 0.0;
  double adv = 0.0;
  double disc = 0.0;
  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

struct CurveRow {
  long step = 0;
  LossRecord loss;
  double eval_return = 0.0;
  double eval_jsd = 0.0;
  double eval_freq_lower = 0.0;
  friend bool operator==(const CurveRow&, const CurveRow&) = default;
};

struct LearningCurve {
  std::vector<CurveRow> rows;

  /// Throws std::invalid_argument unless row.step exceeds the last step.
  void append(const CurveRow& row);
  friend bool operator==(const LearningCurve&, const LearningCurve&) = default;
};

std::string curve_csv_header();
std::string to_csv_row(const CurveRow& row);
std::string to_csv(const LearningCurve& curve);
LearningCurve parse_curve_csv(std::string_view text);

/// Everything a resumed run needs besides the config, data and seed.
struct TrainState {
  long step = 0;
  ad::ParameterSet gen;   // policy, encoder, prior, posterior
  ad::ParameterSet disc;  // discriminator
  ad::AdamState gen_opt;
  ad::AdamState disc_opt;
  double best_return = -std::numeric_limits<double>::infinity();
  long best_step = -1;
  friend bool operator==(const TrainState&, const TrainState&) = default;
};

/// The config a run of `algo` actually trains with: naive_hierarchy forces
/// train.encoder_fraction to 1 and disables annealing.
ExperimentConfig effective_config(ExperimentConfig cfg, Algo algo);

class Trainer {
 public:
  /// naive_hierarchy forces train.encoder_fraction to 1 (and disables annealing).
  Trainer(Algo algo, ExperimentConfig cfg, std::vector<env::Trajectory> data, std::uint64_t seed);

  Algo algo() const { return algo_; }
  const ExperimentConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  TrainState& state() { return state_; }
  const TrainState& state() const { return state_; }
  const std::vector<env::Trajectory>& data() const { return data_; }

  /// One generator update followed by the discriminator updates. Every random
  /// draw comes from a stream keyed by (seed, step), so a restored state
  /// continues exactly. Throws DivergenceError, numbered like the curve rows (the step being taken), on a non-finite loss.
  LossRecord step();

  /// Rollouts of the current policy (snapshot). Hierarchical policies draw one
  /// type per episode from the prior.
  metrics::RolloutFn rollout_fn() const;

  /// eval.episodes fresh episodes from a fixed evaluation stream; minADE over
  /// eval.ade_episodes data episodes when with_ade is set.
  metrics::MetricReport evaluate(bool with_ade) const;

  /// [P(lower), P(upper)] of the training data.
  const Eigen::Vector2d& data_histogram() const { return data_hist_; }

 private:
  struct Generated;
  Generated generate(ad::Tape& tape, const ad::Binding& gen, const TrajectoryBatch& batch, Rng& rng,
                     bool with_losses) const;
  nets::LatentDist prior_dist(ad::Tape& tape, const ad::Binding& gen, ad::Index batch) const;
  bool hierarchical() const { return algo_ == Algo::rtc || algo_ == Algo::naive_hierarchy; }
  bool adversarial() const { return algo_ != Algo::bc; }

  Algo algo_;
  ExperimentConfig cfg_;
  std::vector<env::Trajectory> data_;
  std::uint64_t seed_;
  Eigen::Vector2d data_hist_;

  nets::GmmPolicy policy_;
  nets::TrajectoryEncoder encoder_;
  nets::LatentPrior prior_;
  nets::Discriminator disc_;
  nets::Posterior posterior_;

  TrainState state_;
};

struct TrainHooks {
  /// Called after every eval row is appended.
  std::function<void(const CurveRow&, const Trainer&)> on_eval;
};

/// Steps until train.steps, evaluating every eval.every steps and at the last
/// step. Rows are appended to `curve`.
void train(Trainer& trainer, LearningCurve& curve, const TrainHooks& hooks = {});

}  // namespace rtc::train
