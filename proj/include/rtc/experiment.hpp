// Command implementations behind the rtclab tool. Each command writes only
// inside its output directory and reports failures through the exception
// types in errors.hpp, which the tool maps to exit codes.
#pragma once

#include "rtc/checkpoint.hpp"
#include "rtc/trainer.hpp"
#include "rtc/type_shift.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rtc::cli {

enum ExitCode : int { kOk = 0, kViolation = 1, kUsage = 2, kDivergence = 3, kIo = 4 };

/// $RTCLAB_OUT when set and non-empty, otherwise "rtclab-out".
std::string default_out_root();

/// Loads `config_path` (defaults when empty), then applies "section.key=value"
/// overrides in order.
ExperimentConfig load_experiment_config(const std::string& config_path, const std::vector<std::string>& overrides);

/// Exponential smoothing s_0 = x_0, s_t = decay s_{t-1} + (1 - decay) x_t.
std::vector<double> smooth(const std::vector<double>& xs, double decay);
/// One-sided sign test: P(X >= wins) for X ~ Binomial(n, 1/2). 1 when n = 0.
double sign_test_p(int wins, int n);
double mean(const std::vector<double>& xs);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(const std::vector<double>& xs);

// --- gen-data ---------------------------------------------------------------

struct GenDataArgs {
  int n = 10000;
  std::uint64_t seed = 1;
  std::string out;  // directory
  std::string config_path;
  std::vector<std::string> overrides;
};
/// Writes <out>/dataset.csv and its manifest; returns the dataset path.
std::string gen_data(const GenDataArgs& args, std::ostream& log);

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string algo = "rtc";
  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  std::string data;  // dataset file; empty: generate train.dataset_size episodes from data_seed
  std::uint64_t data_seed = 1;
  std::string out;
  std::string resume;  // checkpoint path
  bool quiet = false;
};

struct TrainOutcome {
  train::LearningCurve curve;
  metrics::MetricReport final_report;
  std::string out_dir;
};

/// Writes config.ini, curve.csv, final_report.csv, checkpoint_{final,best,last_good}.json
/// and manifest.json into args.out. On divergence the manifest is finalized
/// with status "diverged", the last good checkpoint is kept, and the
/// DivergenceError is rethrown.
TrainOutcome run_train(const TrainArgs& args, std::ostream& log);

/// Re-runs the training recorded in a run manifest into `out`.
TrainOutcome replay_run(const std::string& manifest_path, const std::string& out, std::ostream& log);

// --- sweep ------------------------------------------------------------------

struct SweepArgs {
  std::vector<std::string> algos;
  int seeds = 2;
  std::uint64_t seed_base = 0;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string data;
  std::uint64_t data_seed = 1;
  std::string out;
  bool reuse = true;  // keep completed runs whose manifest matches
};

struct SweepRun {
  std::string algo;
  std::uint64_t seed = 0;
  std::string status;  // complete | diverged | failed
  double final_return = 0.0;  // smoothed
  double final_jsd = 0.0;
  double final_freq_lower = 0.0;
};

struct SweepSummaryRow {
  std::string algo;
  int n_ok = 0;
  int n_missing = 0;
  double return_mean = 0.0, return_std = 0.0;
  double jsd_mean = 0.0, jsd_std = 0.0;
  double freq_lower_mean = 0.0, freq_lower_std = 0.0;
};

struct SignTest {
  std::string metric;
  std::string algo_a;
  std::string algo_b;
  std::string direction;  // "a<b" or "a>b"
  int n_pairs = 0;        // untied pairs
  int wins = 0;           // pairs in the stated direction
  double p_value = 1.0;
};

struct SweepResult {
  std::vector<SweepRun> runs;
  std::vector<SweepSummaryRow> summary;
  std::vector<SignTest> tests;
};

/// Runs every (algo, seed) pair into <out>/<algo>/seed_<s>, then writes
/// <out>/sweep.csv (run rows then summary rows) and <out>/sign_tests.csv.
SweepResult run_sweep(const SweepArgs& args, std::ostream& log);

/// Final smoothed metrics of one learning curve.
SweepRun summarize_curve(const train::LearningCurve& curve, double decay);

// --- analyze-theorem ----------------------------------------------------------

struct TheoremArgs {
  std::vector<double> epsilons;
  int solution = 1;
  int sweep = 0;
  std::uint64_t seed = 0;
  std::string out;  // optional directory for theorem.csv / sweep.txt
};
/// Returns kOk, or kViolation if any theorem conclusion fails.
int analyze_theorem(const TheoremArgs& args, std::ostream& out);

// --- plotdata ---------------------------------------------------------------

/// Tidy CSV `algo,seed,step,metric,value` over every run manifest under
/// runs_dir; writes <out>/plotdata.csv and returns the number of data rows.
std::size_t plotdata(const std::string& runs_dir, const std::string& out, std::ostream& log);

}  // namespace rtc::cli
