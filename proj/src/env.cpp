#include "rtc/env.hpp"

#include "rtc/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace rtc::env {

void EpisodeConfig::validate() const {
  if (horizon < 1) throw UsageError("env.horizon must be >= 1");
  if (!(goal_x_min <= goal_x_max)) throw UsageError("env.goal_x_min > env.goal_x_max");
  if (!(0.0 < goal_abs_y_min && goal_abs_y_min <= goal_abs_y_max)) {
    throw UsageError("env.goal_abs_y bounds must satisfy 0 < min <= max");
  }
  if (!(goal_displacement >= 0.0)) throw UsageError("env.goal_displacement must be >= 0");
  if (!(goal_abs_y_min > goal_displacement)) {
    // otherwise a goal could cross the x axis and lose its lower/upper identity
    throw UsageError("env.goal_abs_y_min must exceed env.goal_displacement");
  }
  if (!(goal_threshold > 0.0)) throw UsageError("env.goal_threshold must be > 0");
  if (!(p_lower >= 0.0 && p_lower <= 1.0)) throw UsageError("env.p_lower must lie in [0, 1]");
  if (resample_steps < 1 || resample_steps >= horizon) {
    throw UsageError("env.resample_steps must lie in [1, horizon)");
  }
  if (!(resample_prob >= 0.0 && resample_prob <= 1.0)) {
    throw UsageError("env.resample_prob must lie in [0, 1]");
  }
}

Observation observe(const EnvState& s) {
  Observation o;
  o << s.agent_pos, s.goal_lower(), s.goal_upper(), s.prev_action;
  return o;
}

Scenario sample_scenario(Rng& rng, const EpisodeConfig& cfg) {
  const double speed = cfg.goal_displacement / static_cast<double>(cfg.horizon);
  auto track = [&](double sign) {
    GoalTrack g;
    g.start.x() = rng.uniform(cfg.goal_x_min, cfg.goal_x_max);
    g.start.y() = sign * rng.uniform(cfg.goal_abs_y_min, cfg.goal_abs_y_max);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    g.velocity = speed * Vec2(std::cos(angle), std::sin(angle));
    return g;
  };
  Scenario sc;
  sc.lower = track(-1.0);
  sc.upper = track(+1.0);
  return sc;
}

EnvState start_state(const Scenario& scenario) {
  EnvState s;
  s.scenario = scenario;
  return s;
}

EnvState reset(Rng& rng, const EpisodeConfig& cfg) { return start_state(sample_scenario(rng, cfg)); }

EnvState step(const EnvState& s, const Vec2& action, const EpisodeConfig& cfg) {
  if (s.t >= cfg.horizon) {
    throw std::out_of_range("episode over: t=" + std::to_string(s.t) + " horizon=" +
                            std::to_string(cfg.horizon));
  }
  EnvState next = s;
  next.agent_pos += action;
  next.prev_action = action;
  next.t += 1;
  return next;
}

Vec2 expert_action(const EnvState& s, const Vec2& goal) {
  const Vec2 delta = goal - s.agent_pos;
  const Vec2 d(0.1 * delta.x(), 0.05 * delta.y());
  const double dn = d.norm();
  if (dn == 0.0) return Vec2::Zero();
  return 0.1 * std::sqrt(delta.norm()) * d / dn;
}

Trajectory expert_rollout(Rng& rng, const EpisodeConfig& cfg, const Scenario& scenario) {
  const int T = cfg.horizon;
  Trajectory tr;
  tr.scenario = scenario;
  tr.observations.resize(T + 1, kObsDim);
  tr.actions.resize(T, kActDim);

  EnvState s = start_state(scenario);
  GoalChoice target = GoalChoice::lower;
  for (int t = 0; t < T; ++t) {
    if (t < cfg.resample_steps && (t == 0 || rng.uniform() < cfg.resample_prob)) {
      target = rng.uniform() < cfg.p_lower ? GoalChoice::lower : GoalChoice::upper;
    }
    tr.observations.row(t) = observe(s).transpose();
    const Vec2 goal = target == GoalChoice::lower ? s.goal_lower() : s.goal_upper();
    const Vec2 a = expert_action(s, goal);
    tr.actions.row(t) = a.transpose();
    s = step(s, a, cfg);
  }
  tr.observations.row(T) = observe(s).transpose();
  tr.expert_goal = target;
  return tr;
}

Trajectory expert_rollout(Rng& rng, const EpisodeConfig& cfg) {
  const Scenario sc = sample_scenario(rng, cfg);
  return expert_rollout(rng, cfg, sc);
}

Dataset generate_dataset(int n, std::uint64_t seed, const EpisodeConfig& cfg) {
  if (n < 1) throw UsageError("dataset size must be >= 1");
  cfg.validate();
  Dataset data;
  data.manifest = {seed, n, cfg};
  data.episodes.reserve(static_cast<std::size_t>(n));
  const Rng root(seed, "dataset");
  for (int i = 0; i < n; ++i) {
    Rng rng = root.substream(std::to_string(i));
    data.episodes.push_back(expert_rollout(rng, cfg));
  }
  return data;
}

Rollout differentiable_rollout(ad::Tape& tape, std::span<const Scenario> scenarios,
                               const ActionFn& act, int horizon) {
  const auto B = static_cast<ad::Index>(scenarios.size());
  if (B == 0) throw std::invalid_argument("differentiable_rollout: no scenarios");
  auto goals_at = [&](int t, bool lower) {
    ad::Array g(B, 2);
    for (ad::Index b = 0; b < B; ++b) {
      const auto& track = lower ? scenarios[static_cast<std::size_t>(b)].lower
                                : scenarios[static_cast<std::size_t>(b)].upper;
      g.row(b) = track.at(t).transpose();
    }
    return tape.constant(std::move(g));
  };

  Rollout out;
  ad::Var pos = tape.constant(ad::Array::Zero(B, 2));
  ad::Var prev = tape.constant(ad::Array::Zero(B, 2));
  out.positions.push_back(pos);
  for (int t = 0; t <= horizon; ++t) {
    ad::Var obs = ad::concat_cols({pos, goals_at(t, true), goals_at(t, false), prev});
    out.observations.push_back(obs);
    if (t == horizon) break;
    ad::Var a = act(obs, t);
    if (a.rows() != B || a.cols() != kActDim) {
      throw ad::ShapeError("differentiable_rollout: action must be " + std::to_string(B) + "x2");
    }
    if (!a.value().allFinite()) throw DivergenceError("non-finite action in rollout", t);
    pos = pos + a;
    prev = a;
    out.actions.push_back(a);
    out.positions.push_back(pos);
  }
  return out;
}

std::vector<Trajectory> to_trajectories(const Rollout& rollout,
                                        std::span<const Scenario> scenarios) {
  const int T = rollout.horizon();
  std::vector<Trajectory> out(scenarios.size());
  for (std::size_t b = 0; b < scenarios.size(); ++b) {
    Trajectory& tr = out[b];
    tr.scenario = scenarios[b];
    tr.observations.resize(T + 1, kObsDim);
    tr.actions.resize(T, kActDim);
    const auto r = static_cast<ad::Index>(b);
    for (int t = 0; t <= T; ++t) {
      tr.observations.row(t) = rollout.observations[static_cast<std::size_t>(t)].value().row(r);
      if (t < T) tr.actions.row(t) = rollout.actions[static_cast<std::size_t>(t)].value().row(r);
    }
  }
  return out;
}

}  // namespace rtc::env
