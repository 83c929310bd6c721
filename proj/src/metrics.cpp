#include "rtc/metrics.hpp"

#include "rtc/text_format.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rtc::metrics {

std::string report_csv_header() {
  return "# metric_report v1 (jsd in nats)\n"
         "mean_return,jsd_goal,freq_lower,min_ade,n_episodes,k\n";
}

std::string to_csv_row(const MetricReport& r) {
  return format_double(r.mean_return) + "," + format_double(r.jsd_goal) + "," +
         format_double(r.freq_lower) + "," + format_double(r.min_ade) + "," +
         std::to_string(r.n_episodes) + "," + std::to_string(r.k) + "\n";
}

int episode_return(const env::Trajectory& tr, double threshold) {
  int count = 0;
  for (int t = 1; t <= tr.horizon(); ++t) {
    const env::Vec2 p = tr.position(t);
    const double d = std::min((p - tr.scenario.lower.at(t)).norm(), (p - tr.scenario.upper.at(t)).norm());
    if (d < threshold) ++count;
  }
  return count;
}

double mean_return(std::span<const env::Trajectory> episodes, double threshold) {
  if (episodes.empty()) throw std::invalid_argument("mean_return: no episodes");
  double s = 0.0;
  for (const auto& tr : episodes) s += episode_return(tr, threshold);
  return s / static_cast<double>(episodes.size());
}

int goal_feature(const env::Trajectory& tr) { return tr.final_position().y() < 0.0 ? -1 : +1; }

Eigen::Vector2d goal_histogram(std::span<const env::Trajectory> episodes) {
  if (episodes.empty()) throw std::invalid_argument("goal_histogram: no episodes");
  double lower = 0.0;
  for (const auto& tr : episodes) lower += goal_feature(tr) < 0 ? 1.0 : 0.0;
  lower /= static_cast<double>(episodes.size());
  return {lower, 1.0 - lower};
}

double jsd(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size() || p.size() == 0) throw std::invalid_argument("jsd: size mismatch");
  auto kl_to_mid = [](const Eigen::VectorXd& a, const Eigen::VectorXd& m) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a(i) > 0.0) s += a(i) * std::log(a(i) / m(i));
    }
    return s;
  };
  const Eigen::VectorXd m = 0.5 * (p + q);
  const double v = 0.5 * (kl_to_mid(p, m) + kl_to_mid(q, m));
  return std::clamp(v, 0.0, std::log(2.0));
}

double jsd_hist(std::span<const double> p_samples, std::span<const double> q_samples,
                std::span<const double> bins) {
  if (p_samples.empty() || q_samples.empty()) throw std::invalid_argument("jsd_hist: empty sample set");
  if (bins.empty()) throw std::invalid_argument("jsd_hist: no bins");
  auto histogram = [&](std::span<const double> samples) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bins.size()));
    for (double x : samples) {
      auto it = std::find(bins.begin(), bins.end(), x);
      if (it == bins.end()) throw std::invalid_argument("jsd_hist: sample outside the bins");
      h(it - bins.begin()) += 1.0;
    }
    return Eigen::VectorXd(h / static_cast<double>(samples.size()));
  };
  return jsd(histogram(p_samples), histogram(q_samples));
}

double average_displacement(const env::Trajectory& a, const env::Trajectory& b) {
  const int T = a.horizon();
  if (b.horizon() != T) throw std::invalid_argument("average_displacement: horizon mismatch");
  double s = 0.0;
  for (int t = 1; t <= T; ++t) s += (a.position(t) - b.position(t)).norm();
  return s / static_cast<double>(T);
}

double min_ade(const env::Trajectory& data, std::span<const env::Trajectory> rollouts) {
  if (rollouts.empty()) throw std::invalid_argument("min_ade: K must be >= 1");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : rollouts) best = std::min(best, average_displacement(data, r));
  return best;
}

double test_return(const RolloutFn& policy, const env::EpisodeConfig& cfg, int n_episodes, Rng& rng) {
  std::vector<env::Scenario> sc;
  sc.reserve(static_cast<std::size_t>(n_episodes));
  for (int i = 0; i < n_episodes; ++i) sc.push_back(env::sample_scenario(rng, cfg));
  const auto eps = policy(sc, rng);
  return mean_return(eps, cfg.goal_threshold);
}

double min_ade(const env::Trajectory& data, const RolloutFn& policy, int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("min_ade: K must be >= 1");
  const std::vector<env::Scenario> sc(static_cast<std::size_t>(k), data.scenario);
  const auto rollouts = policy(sc, rng);
  return min_ade(data, rollouts);
}

MetricReport evaluate(const RolloutFn& policy, const EvalRequest& req, Rng& rng) {
  MetricReport r;
  r.n_episodes = req.episodes;
  r.k = req.k;

  std::vector<env::Scenario> sc;
  sc.reserve(static_cast<std::size_t>(req.episodes));
  for (int i = 0; i < req.episodes; ++i) sc.push_back(env::sample_scenario(rng, req.env));
  const auto eps = policy(sc, rng);
  r.mean_return = mean_return(eps, req.env.goal_threshold);
  const Eigen::Vector2d hist = goal_histogram(eps);
  r.freq_lower = hist(0);
  r.jsd_goal = jsd(hist, req.expert_hist);

  if (!req.ade_data.empty()) {
    std::vector<env::Scenario> ade_sc;
    for (const auto& tr : req.ade_data) {
      for (int j = 0; j < req.k; ++j) ade_sc.push_back(tr.scenario);
    }
    const auto rolls = policy(ade_sc, rng);
    double total = 0.0;
    for (std::size_t i = 0; i < req.ade_data.size(); ++i) {
      std::span<const env::Trajectory> group(rolls.data() + i * static_cast<std::size_t>(req.k),
                                             static_cast<std::size_t>(req.k));
      total += min_ade(req.ade_data[i], group);
    }
    r.min_ade = total / static_cast<double>(req.ade_data.size());
  }
  return r;
}

}  // namespace rtc::metrics
