// Training objectives: BC, reconstruction, adversarial (generator and
// discriminator sides), latent regularisers and the InfoMGAIL bonus.
//
// The discriminator outputs the probability that its input came from the
// expert data, so -log D is the policy's cost and falls as rollouts become
// indistinguishable from data.
#pragma once

#include "rtc/env.hpp"
#include "rtc/nets.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rtc::train {

using ad::Var;

enum class Algo { bc, mgail, infomgail, rtc, naive_hierarchy };
enum class KlMode {
  prior_encoder,  // KL[prior || encoder]
  encoder_prior,  // KL[encoder || prior]
  prior_ce_ib,    // -log prior(g_e) + KL[encoder || N(0, I)]
};

std::string to_string(Algo a);
/// Accepts "naive" as an alias of naive_hierarchy.
Algo parse_algo(std::string_view s);
std::string to_string(KlMode m);
KlMode parse_kl_mode(std::string_view s);

struct TrainConfig {
  long steps = 20000;
  int batch_size = 1024;
  int dataset_size = 10000;
  double encoder_fraction = 0.5;
  /// When >= 0, f moves linearly from encoder_fraction to this value over
  /// fraction_anneal_steps.
  double encoder_fraction_end = -1.0;
  long fraction_anneal_steps = 0;
  double lambda_adv = 1.0;
  double beta = 0.01;
  double lr_bc = 0.01;
  double lr_adversarial = 0.004;
  double lr_disc = -1.0;  // < 0: same as the generator
  int disc_updates = 1;
  double clip_norm = 10.0;
  double bc_weight = 0.1;    // auxiliary BC for mgail / infomgail
  double info_weight = 0.1;  // lambda_1 for infomgail
  KlMode kl_mode = KlMode::prior_encoder;
  bool learned_prior = true;

  void validate() const;
  double learning_rate(Algo algo) const;
  double encoder_fraction_at(long step) const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EvalConfig {
  long every = 100;
  int episodes = 10000;
  int ade_episodes = 100;
  int ade_k = 16;
  double smoothing = 0.9;
  int chunk = 1000;  // rollouts evaluated per tape

  void validate() const;
  friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

/// Expert trajectories stacked for batched networks: rows t*B + b for
/// t < T. Observations at T are kept separately in final_obs.
struct TrajectoryBatch {
  ad::Array obs_stack;  // (T*B) x 8
  ad::Array act_stack;  // (T*B) x 2
  ad::Array init_obs;   // B x 8
  std::vector<env::Scenario> scenarios;
  ad::Index batch = 0;
  int horizon = 0;
};

TrajectoryBatch make_batch(std::span<const env::Trajectory> data, std::span<const std::size_t> index);
TrajectoryBatch make_batch(std::span<const env::Trajectory> data);

struct Stacks {
  Var obs;
  Var act;
};
Stacks stacks(ad::Tape& tape, const TrajectoryBatch& batch);
Stacks stacks(const env::Rollout& rollout);

/// Repeats row b of a B x L latent for every timestep: (T*B) x L.
Var latent_per_step(Var latent, int horizon);

/// (T*B) x 1 log pi(a_t | s_t [, latent]).
Var step_log_likelihood(const nets::GmmPolicy& policy, const ad::Binding& bound, Stacks data,
                        std::optional<Var> latent_stack);

/// -mean log pi(a|s) over every (trajectory, step) pair. Throws on an empty batch.
Var loss_bc(const nets::GmmPolicy& policy, const ad::Binding& bound, Stacks data,
            std::optional<Var> latent_stack = std::nullopt);

/// Per trajectory (B x 1): -(1/T) sum_t log pi(a_t | s_t, latent).
Var loss_rec(const nets::GmmPolicy& policy, const ad::Binding& bound, Stacks data, Var latent);

/// Per trajectory (B x 1): sum_t -log D(s_t, a_t) in per-step mode,
/// -T log D(trajectory) in trajectory mode. The binding must be frozen.
Var loss_adv(const nets::Discriminator& disc, const ad::Binding& frozen, const env::Rollout& rollout);

/// -( mean log D(data) + mean log(1 - D(rollouts)) ), minimised over the
/// discriminator.
Var loss_discriminator(const nets::Discriminator& disc, const ad::Binding& bound, Stacks data,
                       ad::Index data_batch, Stacks rollouts, ad::Index rollout_batch);

/// -mean log q(latent | rollout, initial observation).
Var loss_info(const nets::Posterior& posterior, const ad::Binding& bound, const env::Rollout& rollout,
              Var latent);

/// Per trajectory (B x 1) negative log-density of a (constant) latent under `dist`.
Var latent_nll(const nets::LatentDist& dist, const ad::Array& latent);

}  // namespace rtc::train
