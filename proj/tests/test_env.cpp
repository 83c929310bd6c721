#include "rtc/env.hpp"
#include "rtc/errors.hpp"
#include "rtc/metrics.hpp"
#include "rtc/text_format.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

using namespace rtc;

TEST_CASE("rng streams are pure functions of seed, label and counter") {
  Rng a(42, "x"), b(42, "x"), c(42, "y"), d(43, "x");
  const auto a0 = a(), a1 = a();
  CHECK(a0 == b());
  CHECK(a1 == b());
  CHECK(a0 != c());
  CHECK(a0 != d());
  Rng e = Rng::from_state(a.key(), 1);
  CHECK(e() == a1);
  Rng s1 = Rng(42, "x").substream("k"), s2 = Rng(42, "x").substream("k");
  CHECK(s1() == s2());
}

TEST_CASE("rng distributions") {
  Rng r(7, "moments");
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  std::set<std::uint64_t> seen;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
    const auto k = r.below(5);
    REQUIRE(k < 5);
    seen.insert(k);
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(seen.size() == 5);
}

TEST_CASE("dynamics are additive and the horizon is enforced") {
  env::EpisodeConfig cfg;
  cfg.horizon = 2;
  Rng rng(1, "env");
  env::EnvState s = env::reset(rng, cfg);
  s = env::step(s, {0.1, -0.2}, cfg);
  s = env::step(s, {0.3, 0.4}, cfg);
  CHECK(s.agent_pos.x() == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(s.agent_pos.y() == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(s.prev_action == env::Vec2(0.3, 0.4));
  CHECK_THROWS_AS(env::step(s, {0.0, 0.0}, cfg), std::out_of_range);
}

TEST_CASE("observation layout") {
  env::EpisodeConfig cfg;
  Rng rng(2, "env");
  env::EnvState s = env::reset(rng, cfg);
  s = env::step(s, {0.05, 0.01}, cfg);
  const env::Observation o = env::observe(s);
  CHECK(o(0) == s.agent_pos.x());
  CHECK(o(2) == s.goal_lower().x());
  CHECK(o(3) == s.goal_lower().y());
  CHECK(o(5) == s.goal_upper().y());
  CHECK(o(7) == 0.01);
}

TEST_CASE("scenarios keep goals in their half planes") {
  env::EpisodeConfig cfg;
  Rng rng(3, "env");
  for (int i = 0; i < 2000; ++i) {
    const env::Scenario sc = env::sample_scenario(rng, cfg);
    for (int t = 0; t <= cfg.horizon; ++t) {
      REQUIRE(sc.lower.at(t).y() < 0.0);
      REQUIRE(sc.upper.at(t).y() > 0.0);
    }
    CHECK(sc.lower.start.x() >= cfg.goal_x_min);
    CHECK(sc.lower.start.x() <= cfg.goal_x_max);
    CHECK(std::abs(sc.upper.start.y()) >= cfg.goal_abs_y_min);
    CHECK(sc.lower.velocity.norm() == doctest::Approx(cfg.goal_displacement / cfg.horizon).epsilon(1e-12));
  }
}

TEST_CASE("expert action moves faster along x and slows near the goal") {
  env::EnvState s;
  const env::Vec2 far(2.0, 0.5), near(0.05, 0.0125);
  const env::Vec2 a = env::expert_action(s, far);
  CHECK(a.x() > a.y());
  CHECK(a.norm() == doctest::Approx(0.1 * std::sqrt(far.norm())).epsilon(1e-14));
  CHECK(env::expert_action(s, near).norm() < a.norm());
  CHECK(env::expert_action(s, env::Vec2::Zero()).norm() == 0.0);
}

TEST_CASE("expert reaches the side of its final target") {
  const auto ds = env::generate_dataset(3000, 9, env::EpisodeConfig{});
  int lower = 0;
  for (const auto& tr : ds.episodes) {
    REQUIRE(tr.expert_goal.has_value());
    const bool is_lower = *tr.expert_goal == env::GoalChoice::lower;
    lower += is_lower;
    CHECK(metrics::goal_feature(tr) == (is_lower ? -1 : 1));
  }
  CHECK(lower / 3000.0 == doctest::Approx(0.75).epsilon(0.04));
}

TEST_CASE("resample_prob 0 keeps the first draw") {
  env::EpisodeConfig cfg;
  cfg.resample_prob = 0.0;
  const auto ds = env::generate_dataset(500, 4, cfg);
  for (const auto& tr : ds.episodes) {
    // the first step already heads for the final target
    const double dir = *tr.expert_goal == env::GoalChoice::lower ? -1.0 : 1.0;
    REQUIRE(dir * tr.actions(0, 1) > 0.0);
  }
}

TEST_CASE("dataset generation is deterministic and round-trips through text") {
  const env::EpisodeConfig cfg;
  const auto a = env::generate_dataset(25, 3, cfg);
  const auto b = env::generate_dataset(25, 3, cfg);
  CHECK(a.episodes[7].observations == b.episodes[7].observations);
  CHECK_THROWS_AS(env::generate_dataset(0, 3, cfg), UsageError);

  const auto dir = std::filesystem::temp_directory_path() / "rtc_test_env";
  std::filesystem::create_directories(dir);
  const std::string p1 = (dir / "a.csv").string(), p2 = (dir / "b.csv").string();
  env::write_dataset(p1, a);
  env::write_dataset(p2, b);
  CHECK(read_file(p1) == read_file(p2));
  const auto back = env::read_dataset(p1);
  REQUIRE(back.episodes.size() == 25);
  CHECK(back.manifest.seed == 3);
  CHECK(back.manifest.config == cfg);
  for (std::size_t i = 0; i < 25; ++i) {
    CHECK(back.episodes[i].observations == a.episodes[i].observations);
    CHECK(back.episodes[i].actions == a.episodes[i].actions);
  }
  write_file_atomic((dir / "bad.csv").string(), "not a dataset\n");
  CHECK_THROWS_AS(env::read_dataset((dir / "bad.csv").string()), IoError);
  CHECK_THROWS_AS(env::read_dataset((dir / "missing.csv").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("invalid episode configs are rejected") {
  env::EpisodeConfig cfg;
  cfg.horizon = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = {};
  cfg.p_lower = 1.5;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = {};
  cfg.goal_x_min = 3.0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
}

TEST_CASE("differentiable rollout replays the expert exactly") {
  const env::EpisodeConfig cfg;
  const auto ds = env::generate_dataset(4, 8, cfg);
  std::vector<env::Scenario> sc;
  for (const auto& tr : ds.episodes) sc.push_back(tr.scenario);
  ad::Tape tape;
  auto act = [&](ad::Var, int t) {
    ad::Array a(4, 2);
    for (int b = 0; b < 4; ++b) a.row(b) = ds.episodes[static_cast<std::size_t>(b)].actions.row(t);
    return tape.constant(a);
  };
  const env::Rollout r = env::differentiable_rollout(tape, sc, act, cfg.horizon);
  CHECK(r.horizon() == cfg.horizon);
  CHECK(r.batch() == 4);
  const auto trajs = env::to_trajectories(r, sc);
  for (std::size_t b = 0; b < 4; ++b) {
    CHECK((trajs[b].observations - ds.episodes[b].observations).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("non-finite actions raise a divergence error") {
  const auto ds = env::generate_dataset(2, 8, env::EpisodeConfig{});
  std::vector<env::Scenario> sc{ds.episodes[0].scenario, ds.episodes[1].scenario};
  ad::Tape tape;
  auto act = [&](ad::Var, int t) {
    return tape.constant(ad::Array::Constant(2, 2, t == 5 ? std::nan("") : 0.1));
  };
  try {
    env::differentiable_rollout(tape, sc, act, 30);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.step() == 5);
  }
}
