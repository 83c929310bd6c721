#include "rtc/losses.hpp"

#include "rtc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rtc::train {

std::string to_string(Algo a) {
  switch (a) {
    case Algo::bc: return "bc";
    case Algo::mgail: return "mgail";
    case Algo::infomgail: return "infomgail";
    case Algo::rtc: return "rtc";
    case Algo::naive_hierarchy: return "naive";
  }
  return "?";
}

Algo parse_algo(std::string_view s) {
  if (s == "bc") return Algo::bc;
  if (s == "mgail") return Algo::mgail;
  if (s == "infomgail") return Algo::infomgail;
  if (s == "rtc") return Algo::rtc;
  if (s == "naive" || s == "naive_hierarchy") return Algo::naive_hierarchy;
  throw UsageError("unknown algorithm '" + std::string(s) + "'");
}

std::string to_string(KlMode m) {
  switch (m) {
    case KlMode::prior_encoder: return "prior_encoder";
    case KlMode::encoder_prior: return "encoder_prior";
    case KlMode::prior_ce_ib: return "prior_ce_ib";
  }
  return "?";
}

KlMode parse_kl_mode(std::string_view s) {
  if (s == "prior_encoder") return KlMode::prior_encoder;
  if (s == "encoder_prior") return KlMode::encoder_prior;
  if (s == "prior_ce_ib") return KlMode::prior_ce_ib;
  throw UsageError("unknown kl_mode '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (steps < 0) throw UsageError("train.steps must be >= 0");
  if (batch_size < 1) throw UsageError("train.batch_size must be >= 1");
  if (dataset_size < 1) throw UsageError("train.dataset_size must be >= 1");
  if (!(encoder_fraction >= 0.0 && encoder_fraction <= 1.0)) {
    throw UsageError("train.encoder_fraction must lie in [0, 1]");
  }
  if (encoder_fraction_end >= 0.0 && !(encoder_fraction_end <= 1.0)) {
    throw UsageError("train.encoder_fraction_end must lie in [0, 1] (or < 0 to disable)");
  }
  if (!(lambda_adv >= 0.0) || !(beta >= 0.0)) throw UsageError("train.lambda_adv and train.beta must be >= 0");
  if (!(lr_bc > 0.0) || !(lr_adversarial > 0.0)) throw UsageError("learning rates must be > 0");
  if (disc_updates < 0) throw UsageError("train.disc_updates must be >= 0");
  if (!(bc_weight >= 0.0) || !(info_weight >= 0.0)) throw UsageError("loss weights must be >= 0");
}

double TrainConfig::learning_rate(Algo algo) const { return algo == Algo::bc ? lr_bc : lr_adversarial; }

double TrainConfig::encoder_fraction_at(long step) const {
  if (encoder_fraction_end < 0.0 || fraction_anneal_steps <= 0) return encoder_fraction;
  const double u = std::min(1.0, static_cast<double>(step) / static_cast<double>(fraction_anneal_steps));
  return encoder_fraction + u * (encoder_fraction_end - encoder_fraction);
}

void EvalConfig::validate() const {
  if (every < 1) throw UsageError("eval.every must be >= 1");
  if (episodes < 1) throw UsageError("eval.episodes must be >= 1");
  if (ade_episodes < 0 || ade_k < 1) throw UsageError("eval.ade_episodes >= 0 and eval.ade_k >= 1 required");
  if (!(smoothing >= 0.0 && smoothing < 1.0)) throw UsageError("eval.smoothing must lie in [0, 1)");
  if (chunk < 1) throw UsageError("eval.chunk must be >= 1");
}

TrajectoryBatch make_batch(std::span<const env::Trajectory> data, std::span<const std::size_t> index) {
  TrajectoryBatch b;
  b.batch = static_cast<ad::Index>(index.size());
  if (b.batch == 0) return b;
  const int T = data[index[0]].horizon();
  b.horizon = T;
  b.obs_stack.resize(T * b.batch, env::kObsDim);
  b.act_stack.resize(T * b.batch, env::kActDim);
  b.init_obs.resize(b.batch, env::kObsDim);
  for (ad::Index i = 0; i < b.batch; ++i) {
    const env::Trajectory& tr = data[index[static_cast<std::size_t>(i)]];
    if (tr.horizon() != T) throw std::invalid_argument("make_batch: mixed horizons");
    for (int t = 0; t < T; ++t) {
      b.obs_stack.row(t * b.batch + i) = tr.observations.row(t);
      b.act_stack.row(t * b.batch + i) = tr.actions.row(t);
    }
    b.init_obs.row(i) = tr.observations.row(0);
    b.scenarios.push_back(tr.scenario);
  }
  return b;
}

TrajectoryBatch make_batch(std::span<const env::Trajectory> data) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return make_batch(data, idx);
}

Stacks stacks(ad::Tape& tape, const TrajectoryBatch& batch) {
  return {tape.constant(batch.obs_stack), tape.constant(batch.act_stack)};
}

Stacks stacks(const env::Rollout& rollout) {
  const auto T = static_cast<std::size_t>(rollout.horizon());
  std::vector<Var> obs(rollout.observations.begin(), rollout.observations.begin() + static_cast<long>(T));
  return {ad::concat_rows(obs), ad::concat_rows(rollout.actions)};
}

Var latent_per_step(Var latent, int horizon) {
  const ad::Index B = latent.rows();
  std::vector<ad::Index> idx(static_cast<std::size_t>(horizon * B));
  for (std::size_t r = 0; r < idx.size(); ++r) idx[r] = static_cast<ad::Index>(r) % B;
  return ad::gather_rows(latent, std::move(idx));
}

Var step_log_likelihood(const nets::GmmPolicy& policy, const ad::Binding& bound, Stacks data,
                        std::optional<Var> latent_stack) {
  if (data.obs.rows() == 0) throw std::invalid_argument("empty batch");
  return nets::GmmPolicy::log_prob(policy.heads(bound, data.obs, latent_stack), data.act);
}

Var loss_bc(const nets::GmmPolicy& policy, const ad::Binding& bound, Stacks data,
            std::optional<Var> latent_stack) {
  return -ad::mean(step_log_likelihood(policy, bound, data, latent_stack));
}

Var loss_rec(const nets::GmmPolicy& policy, const ad::Binding& bound, Stacks data, Var latent) {
  const ad::Index B = latent.rows();
  const auto T = static_cast<int>(data.obs.rows() / B);
  Var ll = step_log_likelihood(policy, bound, data, latent_per_step(latent, T));
  // (T*B) x 1 time-major -> B x 1 sum over t
  std::vector<Var> per_t;
  for (int t = 0; t < T; ++t) {
    std::vector<ad::Index> rows(static_cast<std::size_t>(B));
    std::iota(rows.begin(), rows.end(), static_cast<ad::Index>(t) * B);
    per_t.push_back(ad::gather_rows(ll, std::move(rows)));
  }
  return ad::scale(ad::row_sum(ad::concat_cols(per_t)), -1.0 / static_cast<double>(T));
}

Var loss_adv(const nets::Discriminator& disc, const ad::Binding& frozen, const env::Rollout& rollout) {
  if (frozen.trainable()) throw std::logic_error("loss_adv: discriminator parameters must be frozen");
  const ad::Index B = rollout.batch();
  const int T = rollout.horizon();
  Stacks s = stacks(rollout);
  Var d = disc.prob(frozen, s.obs, s.act, B);
  Var nll = -ad::log(d);
  if (disc.mode() == nets::DiscMode::trajectory) return ad::scale(nll, static_cast<double>(T));
  std::vector<Var> per_t;
  for (int t = 0; t < T; ++t) {
    std::vector<ad::Index> rows(static_cast<std::size_t>(B));
    std::iota(rows.begin(), rows.end(), static_cast<ad::Index>(t) * B);
    per_t.push_back(ad::gather_rows(nll, std::move(rows)));
  }
  return ad::row_sum(ad::concat_cols(per_t));
}

Var loss_discriminator(const nets::Discriminator& disc, const ad::Binding& bound, Stacks data,
                       ad::Index data_batch, Stacks rollouts, ad::Index rollout_batch) {
  if (data_batch == 0 || rollout_batch == 0) throw std::invalid_argument("loss_discriminator: empty batch");
  Var d_data = disc.prob(bound, data.obs, data.act, data_batch);
  Var d_roll = disc.prob(bound, rollouts.obs, rollouts.act, rollout_batch);
  Var one_minus = ad::shift(-d_roll, 1.0);
  return -(ad::mean(ad::log(d_data)) + ad::mean(ad::log(one_minus)));
}

Var loss_info(const nets::Posterior& posterior, const ad::Binding& bound, const env::Rollout& rollout,
              Var latent) {
  Stacks s = stacks(rollout);
  Var lp = posterior.log_prob(bound, s.obs, s.act, rollout.observations.front(), latent, rollout.batch());
  return -ad::mean(lp);
}

Var latent_nll(const nets::LatentDist& dist, const ad::Array& latent) {
  ad::Tape& tape = dist.mode == nets::LatentMode::discrete ? dist.logits.tape() : dist.mean.tape();
  Var x = tape.constant(latent);
  if (dist.mode == nets::LatentMode::discrete) {
    return -ad::row_sum(x * nets::log_softmax_blocks(dist.logits, dist.blocks, dist.block_size));
  }
  Var z = (x - dist.mean) * ad::exp(-dist.log_std);
  Var half_sq = ad::scale(ad::row_sum(ad::square(z)), 0.5);
  return ad::shift(half_sq + ad::row_sum(dist.log_std), 0.5 * static_cast<double>(latent.cols()) * 1.8378770664093453);
}

}  // namespace rtc::train
