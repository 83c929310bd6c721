// rtclab: dataset generation, training, seed sweeps, theorem analysis and
// plot data for the double-goal experiments.
#include "rtc/errors.hpp"
#include "rtc/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace {

using namespace rtc;
namespace fs = std::filesystem;

std::string or_default(const std::string& value, const std::string& fallback) {
  return value.empty() ? (fs::path(cli::default_out_root()) / fallback).string() : value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rtclab: imitation experiments on the double-goal problem"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rtclab 1.0");

  cli::GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate an expert dataset");
  gen_cmd->add_option("--n", gen.n, "number of episodes")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "dataset seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output directory (default $RTCLAB_OUT/data)");
  gen_cmd->add_option("--config", gen.config_path, "config file; only [env] is used");
  gen_cmd->add_option("--set", gen.overrides, "override a config key: section.key=value");

  cli::TrainArgs tr;
  std::string replay;
  auto* train_cmd = app.add_subcommand("train", "train one model");
  train_cmd->add_option("--algo", tr.algo, "bc | mgail | infomgail | rtc | naive")->capture_default_str();
  train_cmd->add_option("--config", tr.config_path, "config file (defaults when omitted)");
  train_cmd->add_option("--set", tr.overrides, "override a config key: section.key=value");
  train_cmd->add_option("--seed", tr.seed, "training seed")->capture_default_str();
  train_cmd->add_option("--data", tr.data, "dataset file (default: generate from --data-seed)");
  train_cmd->add_option("--data-seed", tr.data_seed, "seed for a generated dataset")->capture_default_str();
  train_cmd->add_option("--out", tr.out, "run directory (default $RTCLAB_OUT/<algo>/seed_<seed>)");
  train_cmd->add_option("--resume", tr.resume, "continue from a checkpoint file");
  train_cmd->add_option("--replay", replay, "re-run the training recorded in a manifest.json");
  train_cmd->add_flag("--quiet", tr.quiet, "no progress lines");

  cli::SweepArgs sw;
  bool no_reuse = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "train several algorithms over several seeds");
  sweep_cmd->add_option("--algos", sw.algos, "algorithms")->required()->delimiter(',');
  sweep_cmd->add_option("--seeds", sw.seeds, "seeds per algorithm (>= 2)")->capture_default_str();
  sweep_cmd->add_option("--seed-base", sw.seed_base, "first seed")->capture_default_str();
  sweep_cmd->add_option("--config", sw.config_path, "config file");
  sweep_cmd->add_option("--set", sw.overrides, "override a config key: section.key=value");
  sweep_cmd->add_option("--data", sw.data, "dataset file");
  sweep_cmd->add_option("--data-seed", sw.data_seed, "seed for a generated dataset")->capture_default_str();
  sweep_cmd->add_option("--out", sw.out, "sweep directory (default $RTCLAB_OUT/sweep)");
  sweep_cmd->add_flag("--no-reuse", no_reuse, "retrain runs that already completed");

  cli::TheoremArgs th;
  auto* theorem_cmd = app.add_subcommand("analyze-theorem", "exact information analysis of discrete worlds");
  theorem_cmd->add_option("--epsilon", th.epsilons, "noise levels in [0, 0.5) (default 0 0.1 0.25 0.4)");
  theorem_cmd->add_option("--solution", th.solution, "traffic-world solution 1 or 2")->capture_default_str();
  theorem_cmd->add_option("--sweep", th.sweep, "check N random worlds instead");
  theorem_cmd->add_option("--seed", th.seed, "seed for --sweep")->capture_default_str();
  theorem_cmd->add_option("--out", th.out, "optional directory for theorem.csv or sweep.txt");

  std::string runs_dir, plot_out;
  auto* plot_cmd = app.add_subcommand("plotdata", "collect learning curves into one tidy CSV");
  plot_cmd->add_option("--runs", runs_dir, "directory searched for run manifests")->required();
  plot_cmd->add_option("--out", plot_out, "output directory (default: --runs)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kUsage;
  }

  try {
    if (*gen_cmd) {
      gen.out = or_default(gen.out, "data");
      cli::gen_data(gen, std::cout);
    } else if (*train_cmd) {
      if (!replay.empty()) {
        const std::string out = or_default(tr.out, "replay");
        cli::replay_run(replay, out, std::cerr);
        std::cout << "replayed into " << out << "\n";
      } else {
        if (tr.out.empty()) {
          tr.out = or_default("", train::to_string(train::parse_algo(tr.algo)) + "/seed_" + std::to_string(tr.seed));
        }
        const auto outcome = cli::run_train(tr, std::cout);
        std::cout << "final return " << outcome.final_report.mean_return << " jsd " << outcome.final_report.jsd_goal
                  << " freq_lower " << outcome.final_report.freq_lower << "\n"
                  << "wrote " << outcome.out_dir << "\n";
      }
    } else if (*sweep_cmd) {
      sw.out = or_default(sw.out, "sweep");
      sw.reuse = !no_reuse;
      cli::run_sweep(sw, std::cout);
    } else if (*theorem_cmd) {
      return cli::analyze_theorem(th, std::cout);
    } else if (*plot_cmd) {
      const std::size_t rows = cli::plotdata(runs_dir, plot_out.empty() ? runs_dir : plot_out, std::cerr);
      std::cout << rows << " rows\n";
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return cli::kUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return cli::kDivergence;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return cli::kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return cli::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kIo;
  }
  return cli::kOk;
}
