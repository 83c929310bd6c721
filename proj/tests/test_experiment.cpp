#include "small_config.hpp"

#include "rtc/errors.hpp"
#include "rtc/experiment.hpp"
#include "rtc/text_format.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>
#include <sys/wait.h>

using namespace rtc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("rtc_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

std::string write_tiny_config(const TempDir& dir, const ExperimentConfig& cfg = testing::tiny_config()) {
  const std::string p = dir / "tiny.ini";
  write_file_atomic(p, serialize_config(cfg));
  return p;
}

int count_lines(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  int n = 0;
  for (std::string line; std::getline(in, line);) n += line.rfind(prefix, 0) == 0;
  return n;
}

int run_tool(const std::string& args) {
  const int status = std::system((std::string(RTCLAB_BIN) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("sign test tail probabilities") {
  CHECK(cli::sign_test_p(10, 10) == doctest::Approx(1.0 / 1024).epsilon(1e-12));
  CHECK(cli::sign_test_p(9, 10) == doctest::Approx(11.0 / 1024).epsilon(1e-12));
  CHECK(cli::sign_test_p(0, 10) == doctest::Approx(1.0));
  CHECK(cli::sign_test_p(0, 0) == 1.0);
  CHECK(cli::sign_test_p(15, 20) == doctest::Approx(21700.0 / 1048576).epsilon(1e-12));
}

TEST_CASE("smoothing and summary statistics") {
  const auto s = cli::smooth({1.0, 0.0, 0.0}, 0.9);
  CHECK(s[0] == 1.0);
  CHECK(s[1] == doctest::Approx(0.9));
  CHECK(s[2] == doctest::Approx(0.81));
  CHECK(cli::smooth(std::vector<double>(20, 2.5), 0.9).back() == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(cli::mean({1, 2, 3, 4}) == 2.5);
  CHECK(cli::stddev({1, 2, 3, 4}) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(cli::stddev({7}) == 0.0);
}

TEST_CASE("gen-data is byte-identical across reruns") {
  TempDir dir("gen");
  std::ostringstream log;
  cli::GenDataArgs a;
  a.n = 30;
  a.out = dir / "a";
  const std::string p1 = cli::gen_data(a, log);
  a.out = dir / "b";
  const std::string p2 = cli::gen_data(a, log);
  CHECK(read_file(p1) == read_file(p2));
  CHECK(env::read_dataset(p1).episodes.size() == 30);
  a.n = 0;
  CHECK_THROWS_AS(cli::gen_data(a, log), UsageError);
}

TEST_CASE("train writes its artifacts and replays bit-identically") {
  TempDir dir("train");
  std::ostringstream log;
  cli::TrainArgs args;
  args.algo = "rtc";
  args.config_path = write_tiny_config(dir);
  args.seed = 2;
  args.out = dir / "run";
  args.quiet = true;
  const auto outcome = cli::run_train(args, log);
  for (const char* f : {"config.ini", "curve.csv", "final_report.csv", "checkpoint_final.json", "checkpoint_best.json",
                        "checkpoint_last_good.json", "manifest.json"}) {
    CHECK(fs::exists(dir.path / "run" / f));
  }
  CHECK(load_config(dir / "run/config.ini") == testing::tiny_config());
  const auto replay = cli::replay_run(dir / "run/manifest.json", dir / "replay", log);
  CHECK(read_file(dir / "run/curve.csv") == read_file(dir / "replay/curve.csv"));
  CHECK(replay.curve.rows == outcome.curve.rows);

  // resume from the halfway checkpoint of a shorter run
  cli::TrainArgs half = args;
  half.out = dir / "resumed";
  half.overrides = {"train.steps=10"};
  cli::run_train(half, log);
  cli::TrainArgs rest = args;
  rest.out = dir / "resumed";
  rest.resume = dir / "resumed/checkpoint_final.json";
  cli::run_train(rest, log);
  CHECK(read_file(dir / "resumed/curve.csv") == read_file(dir / "run/curve.csv"));
}

TEST_CASE("train with a dataset file") {
  TempDir dir("train_data");
  std::ostringstream log;
  cli::GenDataArgs g;
  g.n = 50;
  g.out = dir / "data";
  const std::string data = cli::gen_data(g, log);
  cli::TrainArgs args;
  args.algo = "bc";
  args.config_path = write_tiny_config(dir);
  args.data = data;
  args.out = dir / "run";
  args.quiet = true;
  CHECK_NOTHROW(cli::run_train(args, log));
  args.overrides = {"train.dataset_size=60"};
  CHECK_THROWS_AS(cli::run_train(args, log), UsageError);
  args.overrides = {"env.p_lower=0.5"};
  CHECK_THROWS_AS(cli::run_train(args, log), UsageError);
}

TEST_CASE("sweep rows, summaries and reuse") {
  TempDir dir("sweep");
  std::ostringstream log;
  cli::SweepArgs args;
  args.algos = {"bc", "naive"};
  args.seeds = 3;
  args.config_path = write_tiny_config(dir);
  args.out = dir / "sweep";
  const auto result = cli::run_sweep(args, log);
  CHECK(result.runs.size() == 6);
  CHECK(result.summary.size() == 2);
  const std::string csv = read_file(dir / "sweep/sweep.csv");
  CHECK(count_lines(csv, "run,") == 6);
  CHECK(count_lines(csv, "summary,") == 2);
  for (const auto& s : result.summary) {
    CHECK(s.n_ok == 3);
    std::vector<double> ret;
    for (const auto& r : result.runs)
      if (r.algo == s.algo) ret.push_back(r.final_return);
    CHECK(s.return_mean == doctest::Approx(cli::mean(ret)));
  }
  CHECK(fs::exists(dir / "sweep/sign_tests.csv"));

  std::ostringstream again;
  const auto second = cli::run_sweep(args, again);
  CHECK(count_lines(again.str(), "bc seed 0 (reused)") == 1);
  CHECK(second.runs[4].final_jsd == result.runs[4].final_jsd);

  args.seeds = 1;
  CHECK_THROWS_AS(cli::run_sweep(args, log), UsageError);
}

TEST_CASE("sweep summary of constant curves") {
  train::LearningCurve c;
  for (long s = 1; s <= 30; ++s) c.append({s, {}, 4.0, 0.02, 0.75});
  const auto r = cli::summarize_curve(c, 0.9);
  CHECK(r.final_return == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(r.final_freq_lower == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("plotdata") {
  TempDir dir("plot");
  std::ostringstream log;
  fs::create_directories(dir.path / "empty");
  CHECK(cli::plotdata(dir / "empty", dir / "out_empty", log) == 0);
  CHECK(read_file(dir / "out_empty/plotdata.csv") == "algo,seed,step,metric,value\n");

  auto cfg = testing::tiny_config();
  cfg.train.steps = 50;
  cfg.eval.every = 1;
  cfg.eval.episodes = 8;
  cli::TrainArgs args;
  args.algo = "bc";
  args.config_path = write_tiny_config(dir, cfg);
  args.out = dir / "runs/bc0";
  args.quiet = true;
  cli::run_train(args, log);
  fs::create_directories(dir.path / "runs/broken");
  write_file_atomic(dir / "runs/broken/manifest.json", "{ not json");
  std::ostringstream warn;
  CHECK(cli::plotdata(dir / "runs", dir / "out", warn) == 150);
  CHECK(warn.str().find("warning") != std::string::npos);
  const std::string first = read_file(dir / "out/plotdata.csv");
  cli::plotdata(dir / "runs", dir / "out", warn);
  CHECK(read_file(dir / "out/plotdata.csv") == first);
  CHECK_THROWS_AS(cli::plotdata(dir / "missing", dir / "out", log), IoError);
}

TEST_CASE("analyze-theorem reports") {
  std::ostringstream out;
  cli::TheoremArgs args;
  args.epsilons = {0.0, 0.25};
  CHECK(cli::analyze_theorem(args, out) == cli::kOk);
  CHECK(count_lines(out.str(), "1,") == 2);
  args.epsilons = {0.7};
  CHECK_THROWS_AS(cli::analyze_theorem(args, out), UsageError);
  cli::TheoremArgs sweep;
  sweep.sweep = 1000;
  sweep.seed = 7;
  std::ostringstream sout;
  CHECK(cli::analyze_theorem(sweep, sout) == cli::kOk);
  CHECK(sout.str().find("conclusion violations 0") != std::string::npos);
}

TEST_CASE("tool exit codes") {
  TempDir dir("tool");
  const std::string out = " --out " + (dir / "x");
  CHECK(run_tool("--help") == 0);
  CHECK(run_tool("") == 2);
  CHECK(run_tool("gen-data --n 0" + out) == 2);
  CHECK(run_tool("gen-data --n 5" + out) == 0);
  CHECK(run_tool("train --algo gail" + out) == 2);
  CHECK(run_tool("train --config " + (dir / "missing.ini") + out) == 4);
  CHECK(run_tool("train --set train.nope=1" + out) == 2);
  CHECK(run_tool("analyze-theorem --epsilon 0 0.25") == 0);
  CHECK(run_tool("analyze-theorem --epsilon x") == 2);
  CHECK(run_tool("plotdata --runs " + (dir / "nowhere")) == 4);
  // NaN in the data makes the first step diverge
  auto data = env::generate_dataset(20, 1, env::EpisodeConfig{});
  data.episodes[2].actions(3, 0) = std::nan("");
  env::write_dataset(dir / "nan.csv", data);
  const std::string cfg = write_tiny_config(dir);
  CHECK(run_tool("train --algo bc --config " + cfg + " --set train.dataset_size=20 --set train.batch_size=20 --data " +
                 (dir / "nan.csv") + " --out " + (dir / "div")) == 3);
  CHECK(read_file(dir / "div/manifest.json").find("\"diverged\"") != std::string::npos);
}
