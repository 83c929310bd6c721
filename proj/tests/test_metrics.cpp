#include "rtc/metrics.hpp"

#include <doctest.h>

#include <cmath>

using namespace rtc;

namespace {

// Independent JSD in nats: 0.5 KL(p||m) + 0.5 KL(q||m), terms with zero mass dropped.
double jsd_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) s += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0) s += 0.5 * q[i] * std::log(q[i] / m);
  }
  return s;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

env::Trajectory straight_line(double vx, double vy, const env::Scenario& sc) {
  env::Trajectory tr;
  tr.scenario = sc;
  tr.observations = Eigen::MatrixXd::Zero(31, 8);
  tr.actions = Eigen::MatrixXd::Zero(30, 2);
  for (int t = 0; t < 30; ++t) {
    tr.actions.row(t) << vx, vy;
    tr.observations.block<1, 2>(t + 1, 0) = tr.observations.block<1, 2>(t, 0) + tr.actions.row(t);
  }
  return tr;
}

}  // namespace

TEST_CASE("jsd against an independent evaluation") {
  const std::vector<std::pair<std::vector<double>, std::vector<double>>> cases{
      {{0.75, 0.25}, {0.5, 0.5}}, {{1.0, 0.0}, {0.3, 0.7}}, {{0.2, 0.3, 0.5}, {0.6, 0.1, 0.3}}};
  for (const auto& [p, q] : cases) {
    const Eigen::VectorXd pv = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    const Eigen::VectorXd qv = Eigen::Map<const Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(q.size()));
    CHECK(metrics::jsd(pv, qv) == doctest::Approx(jsd_oracle(p, q)).epsilon(1e-12));
  }
}

TEST_CASE("jsd properties") {
  const auto p = vec({0.7, 0.2, 0.1}), q = vec({0.1, 0.1, 0.8});
  CHECK(std::abs(metrics::jsd(p, q) - metrics::jsd(q, p)) <= 1e-15);
  CHECK(metrics::jsd(p, p) == 0.0);
  CHECK(std::abs(metrics::jsd(vec({1, 0}), vec({0, 1})) - std::log(2.0)) <= 1e-12);
  Rng rng(4, "jsd");
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd a(4), b(4);
    for (int j = 0; j < 4; ++j) {
      a(j) = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
      b(j) = rng.uniform();
    }
    a(0) += 1e-3;
    a /= a.sum();
    b /= b.sum();
    const double d = metrics::jsd(a, b);
    REQUIRE(d >= 0.0);
    REQUIRE(d <= std::log(2.0) + 1e-12);
  }
  CHECK_THROWS(metrics::jsd(vec({0.5, 0.5}), vec({1.0})));
}

TEST_CASE("jsd over empirical histograms") {
  const std::vector<double> bins{-1.0, 1.0};
  const std::vector<double> a{-1, -1, -1, 1}, b{-1, 1};
  CHECK(metrics::jsd_hist(a, b, bins) == doctest::Approx(jsd_oracle({0.75, 0.25}, {0.5, 0.5})).epsilon(1e-12));
  CHECK_THROWS(metrics::jsd_hist({}, b, bins));
  const std::vector<double> outside{0.0};
  CHECK_THROWS(metrics::jsd_hist(outside, b, bins));
}

TEST_CASE("episode return counts steps near either goal") {
  env::Scenario sc;
  sc.lower.start = {0.3, -0.05};
  sc.upper.start = {5.0, 5.0};
  const auto tr = straight_line(0.01, 0.0, sc);
  // agent at (0.01 t, 0): within 0.1 of (0.3, -0.05) when |0.01 t - 0.3| < sqrt(0.01 - 0.0025)
  int expect = 0;
  for (int t = 1; t <= 30; ++t) expect += std::hypot(0.01 * t - 0.3, 0.05) < 0.1;
  CHECK(metrics::episode_return(tr, 0.1) == expect);
  CHECK(expect > 0);
}

TEST_CASE("goal feature and histogram") {
  env::Scenario sc;
  std::vector<env::Trajectory> eps{straight_line(0.1, -0.01, sc), straight_line(0.1, 0.01, sc),
                                   straight_line(0.1, -0.02, sc), straight_line(0.1, 0.0, sc)};
  CHECK(metrics::goal_feature(eps[0]) == -1);
  CHECK(metrics::goal_feature(eps[3]) == 1);
  const auto h = metrics::goal_histogram(eps);
  CHECK(h(0) == 0.5);
  CHECK(h(1) == 0.5);
}

TEST_CASE("minADE is the smallest average displacement and falls with K") {
  env::Scenario sc;
  const auto data = straight_line(0.1, 0.02, sc);
  std::vector<env::Trajectory> rollouts;
  Rng rng(5, "ade");
  for (int k = 0; k < 32; ++k) rollouts.push_back(straight_line(0.1 + 0.05 * rng.normal(), 0.02 + 0.05 * rng.normal(), sc));
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= rollouts.size(); ++k) {
    const double m = metrics::min_ade(data, std::span(rollouts).first(k));
    REQUIRE(m <= prev);
    prev = m;
  }
  // straight lines: displacement at t is t * |dv|, averaged over t = 1..30
  const auto& r = rollouts[0];
  const double dv = std::hypot(r.actions(0, 0) - 0.1, r.actions(0, 1) - 0.02);
  CHECK(metrics::average_displacement(data, r) == doctest::Approx(dv * 15.5).epsilon(1e-12));
  CHECK(metrics::min_ade(data, std::span(rollouts).first(1)) == doctest::Approx(dv * 15.5).epsilon(1e-12));
  CHECK_THROWS(metrics::min_ade(data, std::span<const env::Trajectory>{}));
}

TEST_CASE("evaluating the expert recovers its statistics") {
  const env::EpisodeConfig cfg;
  metrics::RolloutFn expert = [&](std::span<const env::Scenario> sc, Rng& rng) {
    std::vector<env::Trajectory> out;
    for (const auto& s : sc) out.push_back(env::expert_rollout(rng, cfg, s));
    return out;
  };
  metrics::EvalRequest req;
  req.env = cfg;
  req.episodes = 4000;
  Rng rng(6, "eval");
  const auto rep = metrics::evaluate(expert, req, rng);
  CHECK(rep.freq_lower == doctest::Approx(0.75).epsilon(0.03));
  CHECK(rep.jsd_goal < 1e-3);
  CHECK(rep.mean_return > 3.0);
  CHECK(rep.n_episodes == 4000);
}

TEST_CASE("metric report csv") {
  metrics::MetricReport r{1.5, 0.01, 0.7, 0.2, 100, 16};
  CHECK(metrics::report_csv_header().rfind("# metric_report v1", 0) == 0);
  CHECK(metrics::to_csv_row(r).find("1.5") != std::string::npos);
}
