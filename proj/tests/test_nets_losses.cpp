#include "grad_cases.hpp"

#include "rtc/losses.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace rtc;
using ad::Array;

namespace {

double normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

// log sum_k w_k prod_d N(x_d; mu_kd, sigma_kd) from plain head values
double mixture_log_density(const Array& logits, const Array& means, const Array& log_std, int row,
                           const Eigen::RowVectorXd& x) {
  const int K = static_cast<int>(logits.cols());
  const int D = static_cast<int>(x.size());
  double wsum = 0.0;
  for (int k = 0; k < K; ++k) wsum += std::exp(logits(row, k));
  double p = 0.0;
  for (int k = 0; k < K; ++k) {
    double c = std::exp(logits(row, k)) / wsum;
    for (int d = 0; d < D; ++d) c *= normal_pdf(x(d), means(row, k * D + d), std::exp(log_std(row, k * D + d)));
    p += c;
  }
  return std::log(p);
}

}  // namespace

TEST_CASE("gmm log density matches a direct evaluation") {
  ad::Tape t;
  Array logits(2, 2), means(2, 4), ls(2, 4), x(2, 2);
  logits << 0.3, -0.2, 1.0, 0.0;
  means << 0.1, 0.2, -0.3, 0.4, 0.0, 0.0, 1.0, 1.0;
  ls << -1.0, -0.5, 0.0, -2.0, 0.2, 0.1, -0.3, -0.4;
  x << 0.15, 0.1, 0.9, 1.2;
  nets::GmmHeads h{t.constant(logits), t.constant(means), t.constant(ls)};
  const Array lp = nets::gmm_log_prob(h, t.constant(x)).value();
  for (int r = 0; r < 2; ++r) CHECK(lp(r, 0) == doctest::Approx(mixture_log_density(logits, means, ls, r, x.row(r))).epsilon(1e-12));
}

TEST_CASE("bc loss is the average negative mixture log density") {
  nets::NetConfig cfg = testing::small_net_config();
  nets::GmmPolicy policy(cfg, 0);
  ad::ParameterSet params;
  Rng rng(1, "init");
  policy.init(params, rng);
  ad::Tape t;
  ad::Binding bound(t, params, true);
  Array obs = testing::random_array(rng, 3, 8), act = testing::random_array(rng, 3, 2, 0.1);
  const double loss = train::loss_bc(policy, bound, {t.constant(obs), t.constant(act)}).scalar();
  const nets::GmmHeads h = policy.heads(bound, t.constant(obs), std::nullopt);
  double expect = 0.0;
  for (int r = 0; r < 3; ++r) {
    expect -= mixture_log_density(h.logits.value(), h.means.value(), h.log_std.value(), r, act.row(r));
  }
  CHECK(loss == doctest::Approx(expect / 3.0).epsilon(1e-12));
  CHECK_THROWS(train::loss_bc(policy, bound, {t.constant(Array(0, 8)), t.constant(Array(0, 2))}));
}

TEST_CASE("policy log std heads stay within their clamp") {
  nets::NetConfig cfg = testing::small_net_config();
  nets::GmmPolicy policy(cfg, 0);
  ad::ParameterSet params;
  Rng rng(2, "init");
  policy.init(params, rng);
  for (auto& [name, v] : params) v *= 50.0;
  ad::Tape t;
  ad::Binding bound(t, params, false);
  const auto h = policy.heads(bound, t.constant(testing::random_array(rng, 16, 8, 3.0)), std::nullopt);
  CHECK(h.log_std.value().minCoeff() >= cfg.log_std_min);
  CHECK(h.log_std.value().maxCoeff() <= cfg.log_std_max);
}

TEST_CASE("continuous KL matches the closed form") {
  ad::Tape t;
  nets::LatentDist p, q;
  Array mp(1, 2), lp(1, 2), mq(1, 2), lq(1, 2);
  mp << 0.5, -1.0;
  lp << -0.3, 0.2;
  mq << 0.0, 0.4;
  lq << 0.1, -0.5;
  p.mean = t.constant(mp);
  p.log_std = t.constant(lp);
  q.mean = t.constant(mq);
  q.log_std = t.constant(lq);
  double expect = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double sp = std::exp(lp(0, i)), sq = std::exp(lq(0, i));
    expect += std::log(sq / sp) + (sp * sp + (mp(0, i) - mq(0, i)) * (mp(0, i) - mq(0, i))) / (2 * sq * sq) - 0.5;
  }
  CHECK(nets::kl_latent(p, q).scalar() == doctest::Approx(expect).epsilon(1e-13));
  CHECK(nets::kl_latent(p, p).scalar() == doctest::Approx(0.0));
}

TEST_CASE("discrete KL and block log-softmax") {
  ad::Tape t;
  Array a(1, 4), b(1, 4);
  a << 0.0, 1.0, 2.0, -1.0;
  b << 0.5, 0.5, 0.0, 0.0;
  nets::LatentDist p{nets::LatentMode::discrete, {}, {}, t.constant(a), 2, 2};
  nets::LatentDist q{nets::LatentMode::discrete, {}, {}, t.constant(b), 2, 2};
  auto softmax2 = [](double x, double y) { return std::exp(x) / (std::exp(x) + std::exp(y)); };
  double expect = 0.0;
  for (int blk = 0; blk < 2; ++blk) {
    const double p0 = softmax2(a(0, 2 * blk), a(0, 2 * blk + 1)), q0 = softmax2(b(0, 2 * blk), b(0, 2 * blk + 1));
    expect += p0 * std::log(p0 / q0) + (1 - p0) * std::log((1 - p0) / (1 - q0));
  }
  CHECK(nets::kl_latent(p, q).scalar() == doctest::Approx(expect).epsilon(1e-13));
  const Array ls = nets::log_softmax_blocks(t.constant(a), 2, 2).value();
  CHECK(std::exp(ls(0, 0)) + std::exp(ls(0, 1)) == doctest::Approx(1.0).epsilon(1e-15));
  nets::LatentDist c;
  c.mean = t.constant(Array::Zero(1, 4));
  c.log_std = c.mean;
  CHECK_THROWS_AS(nets::kl_latent(p, c), std::invalid_argument);
}

TEST_CASE("straight-through latents are one-hot per block") {
  nets::NetConfig cfg = testing::small_net_config();
  cfg.latent_mode = nets::LatentMode::discrete;
  cfg.discrete_blocks = 3;
  cfg.discrete_block_size = 4;
  ad::Tape t;
  Rng rng(3, "latent");
  auto dist = nets::standard_prior(t, cfg, 20);
  const ad::Var z = nets::sample_latent(dist, nets::LatentNoise::draw(rng, cfg, 20));
  for (int r = 0; r < 20; ++r) {
    nets::LatentType lt{nets::LatentMode::discrete, z.value().row(r).transpose()};
    CHECK(lt.valid(3, 4));
  }
  // gradients flow through the soft relaxation
  ad::Tape t2;
  auto logits = t2.parameter("l", Array::Zero(1, 12));
  nets::LatentDist d{nets::LatentMode::discrete, {}, {}, logits, 3, 4};
  auto g = t2.backward(testing::project(nets::sample_latent(d, nets::LatentNoise::draw(rng, cfg, 1)), 4));
  CHECK(g.at("l").cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("uniform discrete prior samples blocks evenly") {
  nets::NetConfig cfg;
  cfg.latent_mode = nets::LatentMode::discrete;
  cfg.discrete_blocks = 1;
  cfg.discrete_block_size = 4;
  ad::Tape t;
  Rng rng(5, "latent");
  const int n = 20000;
  const Array z = nets::sample_latent(nets::standard_prior(t, cfg, n), nets::LatentNoise::draw(rng, cfg, n)).value();
  for (int j = 0; j < 4; ++j) CHECK(z.col(j).mean() == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("discriminator output stays inside the logit clamp") {
  nets::NetConfig cfg = testing::small_net_config();
  cfg.logit_clamp = 3.0;
  nets::Discriminator disc(cfg);
  ad::ParameterSet params;
  Rng rng(6, "init");
  disc.init(params, rng);
  for (auto& [name, v] : params) v *= 100.0;
  ad::Tape t;
  ad::Binding bound(t, params, false);
  const auto d = disc.prob(bound, t.constant(testing::random_array(rng, 40, 8)), t.constant(testing::random_array(rng, 40, 2)), 4);
  CHECK(d.rows() == 4);
  const double lo = 1.0 / (1.0 + std::exp(3.0));
  CHECK(d.value().minCoeff() >= lo - 1e-15);
  CHECK(d.value().maxCoeff() <= 1.0 - lo + 1e-15);
}

TEST_CASE("discriminator loss at D = 0.5 is 2 log 2") {
  nets::NetConfig cfg = testing::small_net_config();
  nets::Discriminator disc(cfg);
  ad::ParameterSet params;
  Rng rng(7, "init");
  disc.init(params, rng);
  for (auto& [name, v] : params) v.setZero();
  const auto data = env::generate_dataset(6, 1, env::EpisodeConfig{}).episodes;
  const auto batch = train::make_batch(data);
  ad::Tape t;
  ad::Binding bound(t, params, true);
  const auto s = train::stacks(t, batch);
  const double loss = train::loss_discriminator(disc, bound, s, batch.batch, s, batch.batch).scalar();
  CHECK(loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
  train::Stacks empty{t.constant(Array(0, 8)), t.constant(Array(0, 2))};
  CHECK_THROWS(train::loss_discriminator(disc, bound, s, batch.batch, empty, 0));
}

TEST_CASE("discriminator separates a linearly separable toy set") {
  nets::NetConfig cfg = testing::small_net_config();
  cfg.disc_mode = nets::DiscMode::per_step;
  nets::Discriminator disc(cfg);
  ad::ParameterSet params;
  Rng rng(8, "init");
  disc.init(params, rng);
  const int n = 64;
  Array obs = testing::random_array(rng, 2 * n, 8);
  Array act = testing::random_array(rng, 2 * n, 2);
  for (int i = 0; i < n; ++i) act(i, 0) = std::abs(act(i, 0)) + 0.1;
  for (int i = n; i < 2 * n; ++i) act(i, 0) = -std::abs(act(i, 0)) - 0.1;
  ad::AdamState opt;
  ad::AdamConfig acfg;
  acfg.learning_rate = 0.01;
  for (int step = 0; step < 500; ++step) {
    ad::Tape t;
    ad::Binding bound(t, params, true);
    train::Stacks real{t.constant(obs.topRows(n)), t.constant(act.topRows(n))};
    train::Stacks fake{t.constant(obs.bottomRows(n)), t.constant(act.bottomRows(n))};
    auto loss = train::loss_discriminator(disc, bound, real, n, fake, n);
    ad::adam_step(params, t.backward(loss), opt, acfg);
  }
  ad::Tape t;
  ad::Binding bound(t, params, false);
  const Array d = disc.prob(bound, t.constant(obs), t.constant(act), 2 * n).value();
  int correct = 0;
  for (int i = 0; i < 2 * n; ++i) correct += (d(i, 0) > 0.5) == (i < n);
  CHECK(correct / (2.0 * n) > 0.99);
}

TEST_CASE("generator cost needs a frozen discriminator and falls as D rises") {
  nets::NetConfig cfg = testing::small_net_config();
  nets::Discriminator disc(cfg);
  ad::ParameterSet params;
  Rng rng(9, "init");
  disc.init(params, rng);
  for (auto& [name, v] : params) v.setZero();
  const auto data = env::generate_dataset(2, 1, env::EpisodeConfig{}).episodes;
  std::vector<env::Scenario> sc{data[0].scenario, data[1].scenario};
  auto cost = [&](double head_bias) {
    params.at("disc/head/b").setConstant(head_bias);
    ad::Tape t;
    ad::Binding frozen(t, params, false);
    auto r = env::differentiable_rollout(t, sc, [&](ad::Var, int) { return t.constant(Array::Constant(2, 2, 0.05)); }, 30);
    return train::loss_adv(disc, frozen, r).value()(0, 0);
  };
  CHECK(cost(0.0) == doctest::Approx(30.0 * std::log(2.0)).epsilon(1e-13));
  CHECK(cost(2.0) < cost(0.0));
  ad::Tape t;
  ad::Binding trainable(t, params, true);
  auto r = env::differentiable_rollout(t, sc, [&](ad::Var, int) { return t.constant(Array::Constant(2, 2, 0.05)); }, 30);
  CHECK_THROWS_AS(train::loss_adv(disc, trainable, r), std::logic_error);
}

TEST_CASE("latent negative log density") {
  ad::Tape t;
  nets::LatentDist d;
  Array m(1, 2), ls(1, 2), x(1, 2);
  m << 0.2, -0.1;
  ls << -0.5, 0.3;
  x << 1.0, 0.5;
  d.mean = t.constant(m);
  d.log_std = t.constant(ls);
  const double expect = -std::log(normal_pdf(1.0, 0.2, std::exp(-0.5)) * normal_pdf(0.5, -0.1, std::exp(0.3)));
  CHECK(train::latent_nll(d, x).scalar() == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("batches are stacked time-major") {
  const auto data = env::generate_dataset(5, 2, env::EpisodeConfig{}).episodes;
  const std::vector<std::size_t> idx{3, 0, 4};
  const auto b = train::make_batch(data, idx);
  CHECK(b.batch == 3);
  CHECK(b.obs_stack.rows() == 30 * 3);
  CHECK(b.obs_stack.row(7 * 3 + 2) == data[4].observations.row(7));
  CHECK(b.act_stack.row(29 * 3 + 0) == data[3].actions.row(29));
  ad::Tape t;
  auto lat = t.constant(Array::Identity(3, 3));
  CHECK(train::latent_per_step(lat, 30).value().row(5 * 3 + 1) == Array::Identity(3, 3).row(1));
}

TEST_CASE("algorithm and kl mode names") {
  CHECK(train::parse_algo("naive") == train::Algo::naive_hierarchy);
  CHECK(train::to_string(train::Algo::naive_hierarchy) == "naive");
  CHECK_THROWS(train::parse_algo("gail"));
  CHECK(train::parse_kl_mode("prior_ce_ib") == train::KlMode::prior_ce_ib);
  train::TrainConfig tc;
  tc.encoder_fraction = 0.2;
  tc.encoder_fraction_end = 1.0;
  tc.fraction_anneal_steps = 100;
  CHECK(tc.encoder_fraction_at(50) == doctest::Approx(0.6));
  CHECK(tc.encoder_fraction_at(1000) == doctest::Approx(1.0));
}
