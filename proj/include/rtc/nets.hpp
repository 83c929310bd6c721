// Learnable networks: the type-conditioned GMM control policy, trajectory
// encoder, latent prior, discriminator and the InfoMGAIL posterior.
//
// Networks are stateless descriptions (shapes and a parameter-name prefix);
// their weights live in an ad::ParameterSet and are bound onto a tape for each
// forward pass. Batched inputs put one sample per row. Trajectory-shaped
// inputs are "stacks": T blocks of B rows, time-major (row t*B + b).
#pragma once

#include "rtc/autodiff.hpp"
#include "rtc/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rtc::nets {

using ad::Array;
using ad::Index;
using ad::Var;

enum class LatentMode { none, continuous, discrete };
enum class DiscMode { trajectory, per_step };

struct NetConfig {
  int hidden = 256;
  int disc_embed = 32;
  int encoder_embed = 32;
  int pos_embed_dim = 8;
  int horizon = 30;
  LatentMode latent_mode = LatentMode::continuous;
  int latent_dim = 2;
  int discrete_blocks = 3;
  int discrete_block_size = 16;
  double log_std_min = -5.0;
  double log_std_max = 2.0;
  double logit_clamp = 20.0;
  double init_log_std = -2.3;
  DiscMode disc_mode = DiscMode::trajectory;

  /// Width of the latent vector fed to the policy under `mode`.
  int latent_width(LatentMode mode) const;
  int latent_width() const { return latent_width(latent_mode); }

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

/// A single inferred agent type.
struct LatentType {
  LatentMode mode = LatentMode::continuous;
  Eigen::VectorXd value;

  /// Finite for continuous; every block exactly one-hot for discrete.
  bool valid(int blocks, int block_size) const;
};

/// Fully connected net: tanh on hidden layers, linear output.
class Mlp {
 public:
  Mlp(std::string prefix, std::vector<int> widths);
  void init(ad::ParameterSet& params, Rng& rng, double out_scale = 1.0) const;
  Var forward(const ad::Binding& bound, Var x) const;
  const std::string& prefix() const { return prefix_; }
  int out_width() const { return widths_.back(); }

 private:
  std::string prefix_;
  std::vector<int> widths_;
};

/// Mixture of K diagonal Gaussians over D dims, batched.
struct GmmHeads {
  Var logits;   // B x K
  Var means;    // B x (K*D), component k in columns [k*D, (k+1)*D)
  Var log_std;  // B x (K*D), clamped
};

/// B x 1 log-density of x (B x D) under the mixture.
Var gmm_log_prob(const GmmHeads& heads, Var x);

/// Noise for one batched policy sample: a uniform per row for the mode
/// choice, a B x 2 standard normal for the reparameterised Gaussian.
struct PolicyNoise {
  Eigen::VectorXd mode_uniform;
  Array normal;
  static PolicyNoise draw(Rng& rng, Index batch);
};

class GmmPolicy {
 public:
  static constexpr int kModes = 2;

  GmmPolicy(const NetConfig& cfg, int latent_width, std::string prefix = "policy");
  void init(ad::ParameterSet& params, Rng& rng) const;

  /// obs is B x 8; latent is B x latent_width or absent when latent_width==0.
  GmmHeads heads(const ad::Binding& bound, Var obs, std::optional<Var> latent) const;
  /// Mode drawn from the mixture weights (not differentiated), then
  /// mean + exp(log_std) * normal within that mode.
  static Var sample(const GmmHeads& heads, const PolicyNoise& noise);
  static Var log_prob(const GmmHeads& heads, Var action) { return gmm_log_prob(heads, action); }

  int latent_width() const { return latent_width_; }

 private:
  NetConfig cfg_;
  int latent_width_;
  Mlp net_;
};

/// Distribution over latent types, batched.
struct LatentDist {
  LatentMode mode = LatentMode::continuous;
  Var mean;     // continuous: B x L
  Var log_std;  // continuous: B x L
  Var logits;   // discrete: B x (blocks*size)
  int blocks = 0;
  int block_size = 0;
};

struct LatentNoise {
  Array values;  // standard normal (continuous) or Gumbel (discrete)
  static LatentNoise draw(Rng& rng, const NetConfig& cfg, Index batch);
};

/// Continuous: reparameterised Gaussian sample. Discrete: straight-through
/// one-hot per block (hard argmax of Gumbel-perturbed logits forward,
/// softmax gradient backward).
Var sample_latent(const LatentDist& dist, const LatentNoise& noise);

/// Per-block log-softmax of B x (blocks*size) logits.
Var log_softmax_blocks(Var logits, int blocks, int block_size);

/// B x 1 KL(p || q). Throws std::invalid_argument on a mode mismatch.
Var kl_latent(const LatentDist& p, const LatentDist& q);

/// Per-timestep embedder of (obs, action, positional embedding), max-pooled
/// over time, with a linear head producing the latent distribution.
class TrajectoryEncoder {
 public:
  explicit TrajectoryEncoder(const NetConfig& cfg, std::string prefix = "encoder");
  void init(ad::ParameterSet& params, Rng& rng) const;

  LatentDist infer(const ad::Binding& bound, Var obs_stack, Var act_stack, Index batch) const;
  /// The pooled embedding alone (B x encoder_embed).
  Var pooled(const ad::Binding& bound, Var obs_stack, Var act_stack, Index batch) const;

 private:
  NetConfig cfg_;
  std::string prefix_;
  Mlp embed_;
};

/// Learned diagonal Gaussian or per-block categorical over types.
class LatentPrior {
 public:
  explicit LatentPrior(const NetConfig& cfg, std::string prefix = "prior");
  void init(ad::ParameterSet& params) const;
  LatentDist dist(const ad::Binding& bound, Index batch) const;

 private:
  NetConfig cfg_;
  std::string prefix_;
};

/// Fixed N(0, I) or uniform categorical prior, as constants on `tape`.
LatentDist standard_prior(ad::Tape& tape, const NetConfig& cfg, Index batch);

/// Probability that a trajectory (or step) comes from the expert data.
class Discriminator {
 public:
  explicit Discriminator(const NetConfig& cfg, std::string prefix = "disc");
  void init(ad::ParameterSet& params, Rng& rng) const;

  /// Trajectory mode: B x 1. Per-step mode: (T*B) x 1, time-major.
  /// Values lie in [sigmoid(-c), sigmoid(c)] with c = logit_clamp.
  Var prob(const ad::Binding& bound, Var obs_stack, Var act_stack, Index batch) const;
  DiscMode mode() const { return cfg_.disc_mode; }

 private:
  NetConfig cfg_;
  std::string prefix_;
  Mlp embed_;
};

/// InfoMGAIL posterior q(latent | rollout, initial observation).
class Posterior {
 public:
  static constexpr int kModes = 2;

  explicit Posterior(const NetConfig& cfg, std::string prefix = "posterior");
  void init(ad::ParameterSet& params, Rng& rng) const;

  /// B x 1 log-density (continuous) or log-probability (discrete).
  Var log_prob(const ad::Binding& bound, Var obs_stack, Var act_stack, Var init_obs,
               Var latent, Index batch) const;

 private:
  NetConfig cfg_;
  std::string prefix_;
  Mlp embed_;
};

Index count_parameters(const ad::ParameterSet& params, std::string_view prefix);

}  // namespace rtc::nets
