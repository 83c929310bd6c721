// The double goal environment: an agent starting at the origin, two slowly
// drifting goals (one in each half plane) and a scripted expert that picks
// one of them.
#pragma once

#include "rtc/autodiff.hpp"
#include "rtc/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace rtc::env {

using Vec2 = Eigen::Vector2d;
using Observation = Eigen::Matrix<double, 8, 1>;
inline constexpr int kObsDim = 8;
inline constexpr int kActDim = 2;

struct EpisodeConfig {
  int horizon = 30;
  double goal_x_min = 1.8;
  double goal_x_max = 2.2;
  double goal_abs_y_min = 0.3;
  double goal_abs_y_max = 0.7;
  double goal_displacement = 0.15;  // total over the episode
  double goal_threshold = 0.1;
  double p_lower = 0.75;
  int resample_steps = 10;
  /// Probability that the expert redraws its target at each of the first
  /// `resample_steps` steps (step 0 always draws).
  double resample_prob = 1.0;

  /// Throws UsageError when bounds are inconsistent.
  void validate() const;

  friend bool operator==(const EpisodeConfig&, const EpisodeConfig&) = default;
};

enum class GoalChoice { lower, upper };

struct GoalTrack {
  Vec2 start = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  Vec2 at(int t) const { return start + static_cast<double>(t) * velocity; }
};

/// All environment noise of one episode: initial goal locations and their
/// constant drift.
struct Scenario {
  GoalTrack lower;
  GoalTrack upper;
};

struct EnvState {
  int t = 0;
  Vec2 agent_pos = Vec2::Zero();
  Vec2 prev_action = Vec2::Zero();
  Scenario scenario;

  Vec2 goal_lower() const { return scenario.lower.at(t); }
  Vec2 goal_upper() const { return scenario.upper.at(t); }
};

Observation observe(const EnvState& s);

Scenario sample_scenario(Rng& rng, const EpisodeConfig& cfg);
EnvState start_state(const Scenario& scenario);
EnvState reset(Rng& rng, const EpisodeConfig& cfg);

/// Additive dynamics. Throws std::out_of_range once t has reached the horizon.
EnvState step(const EnvState& s, const Vec2& action, const EpisodeConfig& cfg);

/// Moves faster along x than y and shrinks the step as the goal nears.
Vec2 expert_action(const EnvState& s, const Vec2& goal);

struct Trajectory {
  Eigen::MatrixXd observations;  // (T+1) x 8
  Eigen::MatrixXd actions;       // T x 2
  Scenario scenario;
  std::optional<GoalChoice> expert_goal;

  int horizon() const { return static_cast<int>(actions.rows()); }
  Vec2 position(int t) const { return observations.block<1, 2>(t, 0).transpose(); }
  Vec2 final_position() const { return position(horizon()); }
};

Trajectory expert_rollout(Rng& rng, const EpisodeConfig& cfg);
/// Expert with a fixed target choice sequence drawn from `rng`, replaying a
/// given scenario.
Trajectory expert_rollout(Rng& rng, const EpisodeConfig& cfg, const Scenario& scenario);

struct DatasetManifest {
  std::uint64_t seed = 0;
  int n = 0;
  EpisodeConfig config;
};

struct Dataset {
  std::vector<Trajectory> episodes;
  DatasetManifest manifest;
};

/// n independent expert episodes; a pure function of (n, seed, cfg).
Dataset generate_dataset(int n, std::uint64_t seed, const EpisodeConfig& cfg);

/// Dataset text file: header `T=<T> n=<N> seed=<S>` then rows
/// `episode,t,obs_0..obs_7,act_0,act_1` (actions empty on the final row).
/// The manifest goes to `<path>.manifest.json`.
void write_dataset(const std::string& path, const Dataset& data);
Dataset read_dataset(const std::string& path);

/// Batched rollout recorded on a tape. observations/positions hold T+1
/// entries of B x 8 / B x 2, actions T entries of B x 2.
struct Rollout {
  std::vector<ad::Var> observations;
  std::vector<ad::Var> positions;
  std::vector<ad::Var> actions;

  int horizon() const { return static_cast<int>(actions.size()); }
  ad::Index batch() const { return positions.front().rows(); }
};

/// Maps the B x 8 observation at step t to a B x 2 action on the same tape.
using ActionFn = std::function<ad::Var(ad::Var obs, int t)>;

/// Rolls out `act` from the start state of each scenario. Gradients flow
/// through the additive dynamics into whatever `act` depends on. A non-finite
/// action raises DivergenceError naming the step.
Rollout differentiable_rollout(ad::Tape& tape, std::span<const Scenario> scenarios,
                               const ActionFn& act, int horizon);

std::vector<Trajectory> to_trajectories(const Rollout& rollout,
                                        std::span<const Scenario> scenarios);

}  // namespace rtc::env
