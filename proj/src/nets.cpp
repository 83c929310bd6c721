#include "rtc/nets.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rtc::nets {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2*pi)

Array normal_array(Rng& rng, Index rows, Index cols, double stddev) {
  Array a(rows, cols);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = stddev * rng.normal();
  return a;
}

/// B x 1 -> B x k by repeating the column.
Var repeat_col(Var x, int k) { return ad::concat_cols(std::vector<Var>(static_cast<std::size_t>(k), x)); }

/// 1 x m parameter broadcast to B rows.
Var broadcast_row(Var row, Index batch) {
  return ad::gather_rows(row, std::vector<Index>(static_cast<std::size_t>(batch), 0));
}

Var linear(const ad::Binding& bound, const std::string& prefix, Var x) {
  return ad::add_row(ad::matmul(x, bound[prefix + "/W"]), bound[prefix + "/b"]);
}

void init_linear(ad::ParameterSet& params, Rng& rng, const std::string& prefix, int in, int out,
                 double scale) {
  params.add(prefix + "/W", normal_array(rng, in, out, scale / std::sqrt(static_cast<double>(in))));
  params.add(prefix + "/b", Array::Zero(1, out));
}

Var clamp_log_std(Var x, const NetConfig& cfg) { return ad::clamp(x, cfg.log_std_min, cfg.log_std_max); }

}  // namespace

int NetConfig::latent_width(LatentMode mode) const {
  switch (mode) {
    case LatentMode::none: return 0;
    case LatentMode::continuous: return latent_dim;
    case LatentMode::discrete: return discrete_blocks * discrete_block_size;
  }
  return 0;
}

bool LatentType::valid(int blocks, int block_size) const {
  if (mode == LatentMode::continuous) return value.allFinite();
  if (mode != LatentMode::discrete) return value.size() == 0;
  if (value.size() != blocks * block_size) return false;
  for (int b = 0; b < blocks; ++b) {
    int ones = 0;
    for (int j = 0; j < block_size; ++j) {
      const double v = value(b * block_size + j);
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        return false;
      }
    }
    if (ones != 1) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Mlp::Mlp(std::string prefix, std::vector<int> widths) : prefix_(std::move(prefix)), widths_(std::move(widths)) {
  if (widths_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output widths");
}

void Mlp::init(ad::ParameterSet& params, Rng& rng, double out_scale) const {
  for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
    const bool last = i + 2 == widths_.size();
    init_linear(params, rng, prefix_ + "/l" + std::to_string(i), widths_[i], widths_[i + 1],
                last ? out_scale : 1.0);
  }
}

Var Mlp::forward(const ad::Binding& bound, Var x) const {
  for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
    x = linear(bound, prefix_ + "/l" + std::to_string(i), x);
    if (i + 2 < widths_.size()) x = ad::tanh(x);
  }
  return x;
}

// ---------------------------------------------------------------------------

Var gmm_log_prob(const GmmHeads& heads, Var x) {
  const Index K = heads.logits.cols();
  const Index D = x.cols();
  if (heads.means.cols() != K * D || heads.log_std.cols() != K * D) {
    throw ad::ShapeError("gmm_log_prob: head widths do not match K*D");
  }
  std::vector<Var> comps;
  for (Index k = 0; k < K; ++k) {
    Var mu = ad::slice_cols(heads.means, k * D, D);
    Var ls = ad::slice_cols(heads.log_std, k * D, D);
    Var z = (x - mu) * ad::exp(-ls);
    Var lp = ad::scale(ad::row_sum(ad::square(z)), -0.5) - ad::row_sum(ls);
    comps.push_back(ad::shift(lp, -0.5 * static_cast<double>(D) * kLog2Pi));
  }
  Var log_w = heads.logits - repeat_col(ad::logsumexp_rows(heads.logits), static_cast<int>(K));
  return ad::logsumexp_rows(ad::concat_cols(comps) + log_w);
}

PolicyNoise PolicyNoise::draw(Rng& rng, Index batch) {
  PolicyNoise n;
  n.mode_uniform.resize(batch);
  n.normal.resize(batch, 2);
  for (Index b = 0; b < batch; ++b) {
    n.mode_uniform(b) = rng.uniform();
    n.normal(b, 0) = rng.normal();
    n.normal(b, 1) = rng.normal();
  }
  return n;
}

GmmPolicy::GmmPolicy(const NetConfig& cfg, int latent_width, std::string prefix)
    : cfg_(cfg),
      latent_width_(latent_width),
      net_(std::move(prefix), {8 + latent_width, cfg.hidden, cfg.hidden, kModes * (1 + 2 * 2)}) {}

void GmmPolicy::init(ad::ParameterSet& params, Rng& rng) const {
  net_.init(params, rng, 0.1);
  Array& bias = params.at(net_.prefix() + "/l2/b");
  bias.rightCols(2 * kModes).setConstant(cfg_.init_log_std);
}

GmmHeads GmmPolicy::heads(const ad::Binding& bound, Var obs, std::optional<Var> latent) const {
  Var in = obs;
  if (latent_width_ > 0) {
    if (!latent || latent->cols() != latent_width_) {
      throw ad::ShapeError("GmmPolicy: expected a latent of width " + std::to_string(latent_width_));
    }
    in = ad::concat_cols({obs, *latent});
  }
  Var out = net_.forward(bound, in);
  GmmHeads h;
  h.logits = ad::slice_cols(out, 0, kModes);
  h.means = ad::slice_cols(out, kModes, 2 * kModes);
  h.log_std = clamp_log_std(ad::slice_cols(out, 3 * kModes, 2 * kModes), cfg_);
  return h;
}

Var GmmPolicy::sample(const GmmHeads& heads, const PolicyNoise& noise) {
  const Array& logits = heads.logits.value();
  const Index B = logits.rows();
  std::vector<Index> mode(static_cast<std::size_t>(B));
  for (Index b = 0; b < B; ++b) {
    const double m = logits.row(b).maxCoeff();
    Eigen::RowVectorXd w = (logits.row(b).array() - m).exp();
    w /= w.sum();
    double acc = 0.0;
    Index k = w.size() - 1;
    for (Index j = 0; j < w.size(); ++j) {
      acc += w(j);
      if (noise.mode_uniform(b) < acc) {
        k = j;
        break;
      }
    }
    mode[static_cast<std::size_t>(b)] = k;
  }
  Var mu = ad::select_blocks(heads.means, mode, 2);
  Var ls = ad::select_blocks(heads.log_std, mode, 2);
  Var eps = heads.means.tape().constant(noise.normal);
  return mu + ad::exp(ls) * eps;
}

// ---------------------------------------------------------------------------

LatentNoise LatentNoise::draw(Rng& rng, const NetConfig& cfg, Index batch) {
  LatentNoise n;
  if (cfg.latent_mode == LatentMode::discrete) {
    n.values.resize(batch, cfg.latent_width());
    for (Index i = 0; i < n.values.size(); ++i) {
      double u = rng.uniform();
      while (u <= 0.0) u = rng.uniform();
      n.values.data()[i] = -std::log(-std::log(u));
    }
  } else {
    n.values = normal_array(rng, batch, cfg.latent_width(), 1.0);
  }
  return n;
}

Var log_softmax_blocks(Var logits, int blocks, int block_size) {
  std::vector<Var> parts;
  for (int b = 0; b < blocks; ++b) {
    Var l = ad::slice_cols(logits, b * block_size, block_size);
    parts.push_back(l - repeat_col(ad::logsumexp_rows(l), block_size));
  }
  return ad::concat_cols(parts);
}

Var sample_latent(const LatentDist& dist, const LatentNoise& noise) {
  if (dist.mode == LatentMode::continuous) {
    Var eps = dist.mean.tape().constant(noise.values);
    return dist.mean + ad::exp(dist.log_std) * eps;
  }
  if (dist.mode != LatentMode::discrete) throw std::invalid_argument("sample_latent: no latent mode");
  ad::Tape& tape = dist.logits.tape();
  Var perturbed = dist.logits + tape.constant(noise.values);
  std::vector<Var> soft;
  Array hard = Array::Zero(perturbed.rows(), perturbed.cols());
  for (int b = 0; b < dist.blocks; ++b) {
    Var block = ad::slice_cols(perturbed, b * dist.block_size, dist.block_size);
    soft.push_back(ad::softmax_rows(block));
    for (Index r = 0; r < block.rows(); ++r) {
      Index arg = 0;
      block.value().row(r).maxCoeff(&arg);
      hard(r, b * dist.block_size + arg) = 1.0;
    }
  }
  return ad::straight_through(ad::concat_cols(soft), std::move(hard));
}

Var kl_latent(const LatentDist& p, const LatentDist& q) {
  if (p.mode != q.mode) throw std::invalid_argument("kl_latent: latent mode mismatch");
  if (p.mode == LatentMode::continuous) {
    // sum_i [ lq - lp + (e^{2lp} + (mp - mq)^2) / (2 e^{2lq}) - 1/2 ]
    Var var_p = ad::exp(ad::scale(p.log_std, 2.0));
    Var inv_var_q = ad::exp(ad::scale(q.log_std, -2.0));
    Var diff = p.mean - q.mean;
    Var term = q.log_std - p.log_std + ad::scale((var_p + ad::square(diff)) * inv_var_q, 0.5);
    return ad::shift(ad::row_sum(term), -0.5 * static_cast<double>(p.mean.cols()));
  }
  if (p.mode != LatentMode::discrete || p.blocks != q.blocks || p.block_size != q.block_size) {
    throw std::invalid_argument("kl_latent: incompatible discrete layouts");
  }
  Var lp = log_softmax_blocks(p.logits, p.blocks, p.block_size);
  Var lq = log_softmax_blocks(q.logits, q.blocks, q.block_size);
  return ad::row_sum(ad::exp(lp) * (lp - lq));
}

// ---------------------------------------------------------------------------

TrajectoryEncoder::TrajectoryEncoder(const NetConfig& cfg, std::string prefix)
    : cfg_(cfg),
      prefix_(std::move(prefix)),
      embed_(prefix_ + "/embed", {8 + 2 + cfg.pos_embed_dim, cfg.hidden, cfg.hidden, cfg.encoder_embed}) {}

void TrajectoryEncoder::init(ad::ParameterSet& params, Rng& rng) const {
  params.add(prefix_ + "/pos", normal_array(rng, cfg_.horizon, cfg_.pos_embed_dim, 0.1));
  embed_.init(params, rng);
  const int out = cfg_.latent_mode == LatentMode::discrete ? cfg_.latent_width() : 2 * cfg_.latent_dim;
  init_linear(params, rng, prefix_ + "/head", cfg_.encoder_embed, out, 0.1);
}

Var TrajectoryEncoder::pooled(const ad::Binding& bound, Var obs_stack, Var act_stack, Index batch) const {
  const Index T = obs_stack.rows() / batch;
  if (T * batch != obs_stack.rows() || T > cfg_.horizon) {
    throw ad::ShapeError("TrajectoryEncoder: stack rows not a multiple of the batch or too long");
  }
  std::vector<Index> steps(static_cast<std::size_t>(T * batch));
  for (Index r = 0; r < T * batch; ++r) steps[static_cast<std::size_t>(r)] = r / batch;
  Var pos = ad::gather_rows(bound[prefix_ + "/pos"], std::move(steps));
  Var h = embed_.forward(bound, ad::concat_cols({obs_stack, act_stack, pos}));
  return ad::max_pool(h, T);
}

LatentDist TrajectoryEncoder::infer(const ad::Binding& bound, Var obs_stack, Var act_stack, Index batch) const {
  Var out = linear(bound, prefix_ + "/head", pooled(bound, obs_stack, act_stack, batch));
  LatentDist d;
  d.mode = cfg_.latent_mode;
  if (cfg_.latent_mode == LatentMode::discrete) {
    d.logits = out;
    d.blocks = cfg_.discrete_blocks;
    d.block_size = cfg_.discrete_block_size;
  } else {
    d.mean = ad::slice_cols(out, 0, cfg_.latent_dim);
    d.log_std = clamp_log_std(ad::slice_cols(out, cfg_.latent_dim, cfg_.latent_dim), cfg_);
  }
  return d;
}

LatentPrior::LatentPrior(const NetConfig& cfg, std::string prefix) : cfg_(cfg), prefix_(std::move(prefix)) {}

void LatentPrior::init(ad::ParameterSet& params) const {
  if (cfg_.latent_mode == LatentMode::discrete) {
    params.add(prefix_ + "/logits", Array::Zero(1, cfg_.latent_width()));
  } else {
    params.add(prefix_ + "/mean", Array::Zero(1, cfg_.latent_dim));
    params.add(prefix_ + "/log_std", Array::Zero(1, cfg_.latent_dim));
  }
}

LatentDist LatentPrior::dist(const ad::Binding& bound, Index batch) const {
  LatentDist d;
  d.mode = cfg_.latent_mode;
  if (cfg_.latent_mode == LatentMode::discrete) {
    d.logits = broadcast_row(bound[prefix_ + "/logits"], batch);
    d.blocks = cfg_.discrete_blocks;
    d.block_size = cfg_.discrete_block_size;
  } else {
    d.mean = broadcast_row(bound[prefix_ + "/mean"], batch);
    d.log_std = clamp_log_std(broadcast_row(bound[prefix_ + "/log_std"], batch), cfg_);
  }
  return d;
}

LatentDist standard_prior(ad::Tape& tape, const NetConfig& cfg, Index batch) {
  LatentDist d;
  d.mode = cfg.latent_mode;
  if (cfg.latent_mode == LatentMode::discrete) {
    d.logits = tape.constant(Array::Zero(batch, cfg.latent_width()));
    d.blocks = cfg.discrete_blocks;
    d.block_size = cfg.discrete_block_size;
  } else {
    d.mean = tape.constant(Array::Zero(batch, cfg.latent_dim));
    d.log_std = tape.constant(Array::Zero(batch, cfg.latent_dim));
  }
  return d;
}

// ---------------------------------------------------------------------------

Discriminator::Discriminator(const NetConfig& cfg, std::string prefix)
    : cfg_(cfg), prefix_(std::move(prefix)), embed_(prefix_ + "/embed", {8 + 2, cfg.hidden, cfg.hidden, cfg.disc_embed}) {}

void Discriminator::init(ad::ParameterSet& params, Rng& rng) const {
  embed_.init(params, rng);
  init_linear(params, rng, prefix_ + "/head", cfg_.disc_embed, 1, 1.0);
}

Var Discriminator::prob(const ad::Binding& bound, Var obs_stack, Var act_stack, Index batch) const {
  const Index T = obs_stack.rows() / batch;
  if (T * batch != obs_stack.rows()) throw ad::ShapeError("Discriminator: stack rows not a multiple of the batch");
  Var h = embed_.forward(bound, ad::concat_cols({obs_stack, act_stack}));
  if (cfg_.disc_mode == DiscMode::trajectory) h = ad::max_pool(h, T);
  Var logit = linear(bound, prefix_ + "/head", h);
  return ad::sigmoid(ad::clamp(logit, -cfg_.logit_clamp, cfg_.logit_clamp));
}

Posterior::Posterior(const NetConfig& cfg, std::string prefix)
    : cfg_(cfg), prefix_(std::move(prefix)), embed_(prefix_ + "/embed", {8 + 2, cfg.hidden, cfg.hidden, cfg.disc_embed}) {}

void Posterior::init(ad::ParameterSet& params, Rng& rng) const {
  embed_.init(params, rng);
  const int L = cfg_.latent_dim;
  const int out = cfg_.latent_mode == LatentMode::discrete ? cfg_.latent_width() : kModes * (1 + 2 * L);
  init_linear(params, rng, prefix_ + "/head", cfg_.disc_embed + 8, out, 0.1);
}

Var Posterior::log_prob(const ad::Binding& bound, Var obs_stack, Var act_stack, Var init_obs, Var latent,
                        Index batch) const {
  const Index T = obs_stack.rows() / batch;
  if (T * batch != obs_stack.rows()) throw ad::ShapeError("Posterior: stack rows not a multiple of the batch");
  Var h = ad::max_pool(embed_.forward(bound, ad::concat_cols({obs_stack, act_stack})), T);
  Var out = linear(bound, prefix_ + "/head", ad::concat_cols({h, init_obs}));
  if (cfg_.latent_mode == LatentMode::discrete) {
    return ad::row_sum(latent * log_softmax_blocks(out, cfg_.discrete_blocks, cfg_.discrete_block_size));
  }
  const int L = cfg_.latent_dim;
  GmmHeads heads;
  heads.logits = ad::slice_cols(out, 0, kModes);
  heads.means = ad::slice_cols(out, kModes, kModes * L);
  heads.log_std = clamp_log_std(ad::slice_cols(out, kModes + kModes * L, kModes * L), cfg_);
  return gmm_log_prob(heads, latent);
}

Index count_parameters(const ad::ParameterSet& params, std::string_view prefix) {
  return params.subset(prefix).scalar_count();
}

}  // namespace rtc::nets
