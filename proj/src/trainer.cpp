#include "rtc/trainer.hpp"

#include "rtc/errors.hpp"
#include "rtc/text_format.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rtc::train {
namespace {

constexpr const char* kCurveColumns =
    "step,loss_total,loss_rec,loss_kl,loss_adv,loss_disc,eval_return,eval_jsd,eval_freq_lower";

nets::NetConfig net_config(const ExperimentConfig& cfg, Algo algo) {
  nets::NetConfig n = cfg.model;
  n.horizon = cfg.env.horizon;
  if (algo == Algo::bc || algo == Algo::mgail) n.latent_mode = nets::LatentMode::none;
  return n;
}

int policy_latent_width(const ExperimentConfig& cfg, Algo algo) {
  if (algo == Algo::bc || algo == Algo::mgail) return 0;
  return cfg.model.latent_width();
}

std::vector<std::size_t> draw_batch(Rng& rng, std::size_t size, std::size_t n) {
  std::vector<std::size_t> idx;
  if (n <= size) {
    std::vector<std::size_t> perm(size);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(size - i));
      std::swap(perm[i], perm[j]);
    }
    idx.assign(perm.begin(), perm.begin() + static_cast<long>(n));
  } else {
    for (std::size_t i = 0; i < n; ++i) idx.push_back(static_cast<std::size_t>(rng.below(size)));
  }
  return idx;
}

void require_finite(double v, const char* what, long step) {
  if (!std::isfinite(v)) throw DivergenceError(std::string("non-finite ") + what, step);
}

Var sum_or_zero(ad::Tape& tape, std::optional<Var> v) {
  return v ? ad::sum(*v) : tape.constant(ad::Array::Zero(1, 1));
}

Stacks constant_stacks(ad::Tape& tape, const Stacks& s) {
  return {tape.constant(s.obs.value()), tape.constant(s.act.value())};
}

}  // namespace

ExperimentConfig effective_config(ExperimentConfig cfg, Algo algo) {
  if (algo == Algo::naive_hierarchy) {
    cfg.train.encoder_fraction = 1.0;
    cfg.train.encoder_fraction_end = -1.0;
  }
  cfg.model.horizon = cfg.env.horizon;
  return cfg;
}

// ---------------------------------------------------------------------------

void LearningCurve::append(const CurveRow& row) {
  if (!rows.empty() && row.step <= rows.back().step) {
    throw std::invalid_argument("learning curve steps must increase strictly");
  }
  rows.push_back(row);
}

std::string curve_csv_header() { return std::string(kCurveColumns) + "\n"; }

std::string to_csv_row(const CurveRow& r) {
  std::string s = std::to_string(r.step);
  for (double v : {r.loss.total, r.loss.rec, r.loss.kl, r.loss.adv, r.loss.disc, r.eval_return, r.eval_jsd,
                   r.eval_freq_lower}) {
    s += ",";
    s += format_double(v);
  }
  return s + "\n";
}

std::string to_csv(const LearningCurve& curve) {
  std::string s = curve_csv_header();
  for (const auto& r : curve.rows) s += to_csv_row(r);
  return s;
}

LearningCurve parse_curve_csv(std::string_view text) {
  LearningCurve curve;
  bool header = true;
  int line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != kCurveColumns) throw IoError("learning curve: unexpected header");
      header = false;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 9) throw IoError("learning curve line " + std::to_string(line_no) + ": expected 9 fields");
    CurveRow r;
    try {
      r.step = parse_int(f[0]);
      r.loss = {parse_double(f[1]), parse_double(f[2]), parse_double(f[3]), parse_double(f[4]), parse_double(f[5])};
      r.eval_return = parse_double(f[6]);
      r.eval_jsd = parse_double(f[7]);
      r.eval_freq_lower = parse_double(f[8]);
      curve.append(r);
    } catch (const std::invalid_argument& e) {
      throw IoError("learning curve line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (header) throw IoError("learning curve: missing header");
  return curve;
}

// ---------------------------------------------------------------------------

struct Trainer::Generated {
  env::Rollout rollout;
  std::optional<Var> latent;  // N x L conditioning the rollout
  std::optional<Var> rec;     // n_enc x 1
  std::optional<Var> kl;      // n_enc x 1
  ad::Index n_enc = 0;
};

Trainer::Trainer(Algo algo, ExperimentConfig cfg, std::vector<env::Trajectory> data, std::uint64_t seed)
    : algo_(algo),
      cfg_(effective_config(std::move(cfg), algo)),
      data_(std::move(data)),
      seed_(seed),
      policy_(net_config(cfg_, algo), policy_latent_width(cfg_, algo)),
      encoder_(net_config(cfg_, algo)),
      prior_(net_config(cfg_, algo)),
      disc_(net_config(cfg_, algo)),
      posterior_(net_config(cfg_, algo)) {
  cfg_.validate();
  if (data_.empty()) throw UsageError("training needs at least one data episode");
  for (const auto& tr : data_) {
    if (tr.horizon() != cfg_.env.horizon) throw UsageError("data horizon does not match env.horizon");
  }
  data_hist_ = metrics::goal_histogram(data_);

  const Rng init(seed_, "init");
  Rng r = init.substream("policy");
  policy_.init(state_.gen, r);
  if (hierarchical()) {
    r = init.substream("encoder");
    encoder_.init(state_.gen, r);
    if (cfg_.train.learned_prior) prior_.init(state_.gen);
  }
  if (algo_ == Algo::infomgail) {
    r = init.substream("posterior");
    posterior_.init(state_.gen, r);
  }
  if (adversarial()) {
    r = init.substream("disc");
    disc_.init(state_.disc, r);
  }
}

nets::LatentDist Trainer::prior_dist(ad::Tape& tape, const ad::Binding& gen, ad::Index batch) const {
  if (algo_ == Algo::infomgail || !cfg_.train.learned_prior) {
    return nets::standard_prior(tape, cfg_.model, batch);
  }
  return prior_.dist(gen, batch);
}

Trainer::Generated Trainer::generate(ad::Tape& tape, const ad::Binding& gen, const TrajectoryBatch& batch,
                                     Rng& rng, bool with_losses) const {
  Generated g;
  const ad::Index N = batch.batch;
  if (hierarchical()) {
    const double f = cfg_.train.encoder_fraction_at(state_.step);
    g.n_enc = std::min<ad::Index>(N, static_cast<ad::Index>(std::ceil(f * static_cast<double>(N))));
    const ad::Index n_prior = N - g.n_enc;
    std::vector<Var> parts;
    if (g.n_enc > 0) {
      // Rebuild the encoder partition from the stacked rows of `batch`.
      TrajectoryBatch eb;
      eb.batch = g.n_enc;
      eb.horizon = batch.horizon;
      eb.obs_stack.resize(batch.horizon * g.n_enc, env::kObsDim);
      eb.act_stack.resize(batch.horizon * g.n_enc, env::kActDim);
      for (int t = 0; t < batch.horizon; ++t) {
        eb.obs_stack.middleRows(t * g.n_enc, g.n_enc) = batch.obs_stack.middleRows(t * N, g.n_enc);
        eb.act_stack.middleRows(t * g.n_enc, g.n_enc) = batch.act_stack.middleRows(t * N, g.n_enc);
      }
      Stacks s = stacks(tape, eb);
      nets::LatentDist q = encoder_.infer(gen, s.obs, s.act, g.n_enc);
      Var ge = nets::sample_latent(q, nets::LatentNoise::draw(rng, cfg_.model, g.n_enc));
      parts.push_back(ge);
      if (with_losses) {
        g.rec = loss_rec(policy_, gen, s, ge);
        nets::LatentDist p = prior_dist(tape, gen, g.n_enc);
        switch (cfg_.train.kl_mode) {
          case KlMode::prior_encoder: g.kl = nets::kl_latent(p, q); break;
          case KlMode::encoder_prior: g.kl = nets::kl_latent(q, p); break;
          case KlMode::prior_ce_ib:
            g.kl = latent_nll(p, ge.value()) + nets::kl_latent(q, nets::standard_prior(tape, cfg_.model, g.n_enc));
            break;
        }
      }
    }
    if (n_prior > 0) {
      nets::LatentDist p = prior_dist(tape, gen, n_prior);
      parts.push_back(nets::sample_latent(p, nets::LatentNoise::draw(rng, cfg_.model, n_prior)));
    }
    g.latent = ad::concat_rows(parts);
  } else if (algo_ == Algo::infomgail) {
    nets::LatentDist p = nets::standard_prior(tape, cfg_.model, N);
    g.latent = nets::sample_latent(p, nets::LatentNoise::draw(rng, cfg_.model, N));
  }

  std::optional<Var> latent = g.latent;
  const auto act = [&](Var obs, int) {
    nets::GmmHeads h = policy_.heads(gen, obs, latent);
    return nets::GmmPolicy::sample(h, nets::PolicyNoise::draw(rng, obs.rows()));
  };
  g.rollout = env::differentiable_rollout(tape, batch.scenarios, act, batch.horizon);
  return g;
}

LossRecord Trainer::step() {
  const long s = state_.step;
  const TrainConfig& tc = cfg_.train;
  Rng rng(seed_, "train/" + std::to_string(s));
  const auto idx = draw_batch(rng, data_.size(), static_cast<std::size_t>(tc.batch_size));
  const TrajectoryBatch batch = make_batch(data_, idx);
  const ad::Index N = batch.batch;
  const double inv_n = 1.0 / static_cast<double>(N);

  LossRecord rec;
  ad::Gradients grads;
  {
    ad::Tape tape;
    ad::Binding gen(tape, state_.gen, true);
    Var total;
    if (algo_ == Algo::bc) {
      total = loss_bc(policy_, gen, stacks(tape, batch));
      rec.rec = total.scalar();
    } else {
      ad::Binding frozen(tape, state_.disc, false);
      Generated g;
      try {
        g = generate(tape, gen, batch, rng, true);
      } catch (const DivergenceError& e) {
        throw DivergenceError(e.what(), s + 1);
      }
      Var adv = ad::sum(loss_adv(disc_, frozen, g.rollout));
      rec.adv = adv.scalar() * inv_n;
      if (hierarchical()) {
        Var rec_sum = sum_or_zero(tape, g.rec);
        Var kl_sum = sum_or_zero(tape, g.kl);
        rec.rec = g.n_enc > 0 ? rec_sum.scalar() / static_cast<double>(g.n_enc) : 0.0;
        rec.kl = g.n_enc > 0 ? kl_sum.scalar() / static_cast<double>(g.n_enc) : 0.0;
        total = ad::scale(ad::scale(adv, tc.lambda_adv) + rec_sum + ad::scale(kl_sum, tc.beta), inv_n);
      } else {
        total = ad::scale(adv, tc.lambda_adv * inv_n);
        std::optional<Var> zero_latent;
        if (algo_ == Algo::infomgail) {
          zero_latent = tape.constant(ad::Array::Zero(batch.horizon * N, policy_.latent_width()));
          Var info = loss_info(posterior_, gen, g.rollout, *g.latent);
          rec.kl = info.scalar();
          total = total + ad::scale(info, tc.info_weight);
        }
        Var bc = loss_bc(policy_, gen, stacks(tape, batch), zero_latent);
        rec.rec = bc.scalar();
        total = total + ad::scale(bc, tc.bc_weight);
      }
    }
    rec.total = total.scalar();
    require_finite(rec.total, "generator loss", s + 1);
    grads = tape.backward(total);
  }
  require_finite(ad::clip_global_norm(grads, tc.clip_norm), "generator gradient", s + 1);
  ad::adam_step(state_.gen, grads, state_.gen_opt, {.learning_rate = tc.learning_rate(algo_)});

  if (adversarial()) {
    const double lr = tc.lr_disc > 0.0 ? tc.lr_disc : tc.learning_rate(algo_);
    for (int k = 0; k < tc.disc_updates; ++k) {
      Rng drng = rng.substream("disc/" + std::to_string(k));
      Stacks fake_values;
      ad::Tape roll_tape;
      {
        ad::Binding gen(roll_tape, state_.gen, false);
        Generated g;
        try {
          g = generate(roll_tape, gen, batch, drng, false);
        } catch (const DivergenceError& e) {
          throw DivergenceError(e.what(), s + 1);
        }
        fake_values = stacks(g.rollout);
      }
      ad::Tape tape;
      ad::Binding disc(tape, state_.disc, true);
      Var loss = loss_discriminator(disc_, disc, stacks(tape, batch), N, constant_stacks(tape, fake_values), N);
      rec.disc = loss.scalar();
      require_finite(rec.disc, "discriminator loss", s + 1);
      ad::Gradients dg = tape.backward(loss);
      require_finite(ad::clip_global_norm(dg, tc.clip_norm), "discriminator gradient", s + 1);
      ad::adam_step(state_.disc, dg, state_.disc_opt, {.learning_rate = lr});
    }
  }
  ++state_.step;
  return rec;
}

metrics::RolloutFn Trainer::rollout_fn() const {
  const ad::ParameterSet params = state_.gen;
  const nets::GmmPolicy policy = policy_;
  const nets::LatentPrior prior = prior_;
  const nets::NetConfig net = cfg_.model;
  const Algo algo = algo_;
  const bool learned_prior = cfg_.train.learned_prior;
  const int horizon = cfg_.env.horizon;
  const int chunk = cfg_.eval.chunk;
  return [=](std::span<const env::Scenario> scenarios, Rng& rng) {
    std::vector<env::Trajectory> out;
    out.reserve(scenarios.size());
    for (std::size_t start = 0; start < scenarios.size(); start += static_cast<std::size_t>(chunk)) {
      const auto part = scenarios.subspan(start, std::min(scenarios.size() - start, static_cast<std::size_t>(chunk)));
      const auto B = static_cast<ad::Index>(part.size());
      ad::Tape tape;
      ad::Binding bound(tape, params, false);
      std::optional<Var> latent;
      if (algo == Algo::infomgail || ((algo == Algo::rtc || algo == Algo::naive_hierarchy) && !learned_prior)) {
        latent = nets::sample_latent(nets::standard_prior(tape, net, B), nets::LatentNoise::draw(rng, net, B));
      } else if (algo == Algo::rtc || algo == Algo::naive_hierarchy) {
        latent = nets::sample_latent(prior.dist(bound, B), nets::LatentNoise::draw(rng, net, B));
      }
      const auto act = [&](Var obs, int) {
        return nets::GmmPolicy::sample(policy.heads(bound, obs, latent), nets::PolicyNoise::draw(rng, obs.rows()));
      };
      const env::Rollout r = env::differentiable_rollout(tape, part, act, horizon);
      auto trs = env::to_trajectories(r, part);
      std::move(trs.begin(), trs.end(), std::back_inserter(out));
    }
    return out;
  };
}

metrics::MetricReport Trainer::evaluate(bool with_ade) const {
  Rng rng(seed_, "eval");
  metrics::EvalRequest req;
  req.env = cfg_.env;
  req.episodes = cfg_.eval.episodes;
  req.k = cfg_.eval.ade_k;
  req.expert_hist = data_hist_;
  if (with_ade) {
    const auto n = std::min(data_.size(), static_cast<std::size_t>(cfg_.eval.ade_episodes));
    req.ade_data = std::span<const env::Trajectory>(data_.data(), n);
  }
  return metrics::evaluate(rollout_fn(), req, rng);
}

void train(Trainer& trainer, LearningCurve& curve, const TrainHooks& hooks) {
  const long total = trainer.config().train.steps;
  const long every = trainer.config().eval.every;
  while (trainer.state().step < total) {
    const LossRecord loss = trainer.step();
    const long s = trainer.state().step;
    if (s % every != 0 && s != total) continue;
    const metrics::MetricReport m = trainer.evaluate(false);
    CurveRow row{s, loss, m.mean_return, m.jsd_goal, m.freq_lower};
    curve.append(row);
    TrainState& st = trainer.state();
    if (m.mean_return > st.best_return) {
      st.best_return = m.mean_return;
      st.best_step = s;
    }
    if (hooks.on_eval) hooks.on_eval(row, trainer);
  }
}

}  // namespace rtc::train
