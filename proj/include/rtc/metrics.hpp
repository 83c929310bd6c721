// Task performance and distributional realism on the double goal problem.
#pragma once

#include "rtc/env.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rtc::metrics {

struct MetricReport {
  double mean_return = 0.0;  // steps within the goal threshold, averaged
  double jsd_goal = 0.0;     // nats
  double freq_lower = 0.0;   // fraction of episodes ending with y_T < 0
  double min_ade = 0.0;
  int n_episodes = 0;
  int k = 0;  // rollouts per data episode for min_ade

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

/// `# metric_report v1` comment line plus the column header.
std::string report_csv_header();
std::string to_csv_row(const MetricReport& r);

/// Number of steps t in 1..T at which the agent is within `threshold` of
/// either goal.
int episode_return(const env::Trajectory& tr, double threshold);
double mean_return(std::span<const env::Trajectory> episodes, double threshold);

/// Sign of the final y coordinate; y_T == 0 maps to +1.
int goal_feature(const env::Trajectory& tr);
/// [P(-1), P(+1)] over the episodes.
Eigen::Vector2d goal_histogram(std::span<const env::Trajectory> episodes);

/// Jensen-Shannon divergence in nats between two probability vectors.
double jsd(const Eigen::VectorXd& p, const Eigen::VectorXd& q);
/// JSD between the empirical histograms of two sample sets over categorical
/// `bins`. Throws on an empty sample set or a sample outside the bins.
double jsd_hist(std::span<const double> p_samples, std::span<const double> q_samples,
                std::span<const double> bins);

/// (1/T) sum_{t=1..T} |pos_a(t) - pos_b(t)|.
double average_displacement(const env::Trajectory& a, const env::Trajectory& b);
double min_ade(const env::Trajectory& data, std::span<const env::Trajectory> rollouts);

/// Produces one rollout per scenario (latent types, if any, drawn inside).
using RolloutFn =
    std::function<std::vector<env::Trajectory>(std::span<const env::Scenario>, Rng&)>;

double test_return(const RolloutFn& policy, const env::EpisodeConfig& cfg, int n_episodes, Rng& rng);
/// K rollouts replaying the data episode's scenario; minimum ADE among them.
double min_ade(const env::Trajectory& data, const RolloutFn& policy, int k, Rng& rng);

struct EvalRequest {
  env::EpisodeConfig env;
  int episodes = 10000;
  std::span<const env::Trajectory> ade_data;
  int k = 16;
  Eigen::Vector2d expert_hist = Eigen::Vector2d(0.75, 0.25);
};

MetricReport evaluate(const RolloutFn& policy, const EvalRequest& req, Rng& rng);

}  // namespace rtc::metrics
