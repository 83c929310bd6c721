#include "rtc/experiment.hpp"

#include "rtc/errors.hpp"
#include "rtc/text_format.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <map>
#include <ostream>

namespace rtc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string now_utc() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const std::string& binary_hash() {
  static const std::string hash = [] {
    try {
      return git_blob_hash(read_file("/proc/self/exe"));
    } catch (const std::exception&) {
      return std::string("unknown");
    }
  }();
  return hash;
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) throw UsageError("output directory must not be empty");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir + "'");
}

std::string join_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

/// Where the training data comes from.
struct DataSpec {
  std::string path;  // empty: generated
  std::uint64_t seed = 1;
};

json data_json(const DataSpec& d, const ExperimentConfig& cfg) {
  if (d.path.empty()) return {{"source", "generated"}, {"seed", d.seed}, {"n", cfg.train.dataset_size}};
  return {{"source", "file"}, {"path", fs::absolute(d.path).string()}, {"hash", git_blob_hash(read_file(d.path))}};
}

std::vector<env::Trajectory> load_training_data(const DataSpec& d, const ExperimentConfig& cfg) {
  if (d.path.empty()) return env::generate_dataset(cfg.train.dataset_size, d.seed, cfg.env).episodes;
  env::Dataset ds = env::read_dataset(d.path);
  if (!(ds.manifest.config == cfg.env)) throw UsageError("dataset environment config differs from [env]");
  const auto n = static_cast<std::size_t>(cfg.train.dataset_size);
  if (ds.episodes.size() < n) {
    throw UsageError("dataset has " + std::to_string(ds.episodes.size()) + " episodes, train.dataset_size is " +
                     std::to_string(n));
  }
  ds.episodes.resize(n);
  return std::move(ds.episodes);
}

void write_manifest(const std::string& dir, const json& m) {
  write_file_atomic(join_path(dir, "manifest.json"), m.dump(2) + "\n");
}

struct TrainJob {
  train::Algo algo = train::Algo::rtc;
  ExperimentConfig cfg;
  std::uint64_t seed = 0;
  DataSpec data;
  std::string out;
  std::string resume;
  bool quiet = false;
};

TrainOutcome run_job(const TrainJob& job, std::ostream& log) {
  ensure_dir(job.out);
  train::Trainer trainer(job.algo, job.cfg, load_training_data(job.data, job.cfg), job.seed);
  const std::string config_text = serialize_config(trainer.config());

  train::LearningCurve curve;
  if (!job.resume.empty()) {
    const Checkpoint ck = load_checkpoint(job.resume);
    restore(trainer, ck);
    const std::string old_curve = join_path(fs::path(job.resume).parent_path().string(), "curve.csv");
    if (fs::exists(old_curve)) {
      for (const auto& row : train::parse_curve_csv(read_file(old_curve)).rows) {
        if (row.step <= ck.state.step) curve.append(row);
      }
    }
  }

  const std::string curve_path = join_path(job.out, "curve.csv");
  const std::string config_path = join_path(job.out, "config.ini");
  const std::string ck_final = join_path(job.out, "checkpoint_final.json");
  const std::string ck_best = join_path(job.out, "checkpoint_best.json");
  const std::string ck_last = join_path(job.out, "checkpoint_last_good.json");
  const std::string report_path = join_path(job.out, "final_report.csv");
  write_file_atomic(config_path, config_text);

  json manifest = {{"format", "rtclab-run"},
                   {"version", 1},
                   {"command", "train"},
                   {"algo", train::to_string(job.algo)},
                   {"seed", job.seed},
                   {"status", "running"},
                   {"config", config_text},
                   {"config_hash", git_blob_hash(config_text)},
                   {"binary_hash", binary_hash()},
                   {"data", data_json(job.data, job.cfg)},
                   {"resumed_from", job.resume.empty() ? json(nullptr) : json(fs::absolute(job.resume).string())},
                   {"started", now_utc()},
                   {"finished", nullptr},
                   {"files", json::array({"config.ini", "curve.csv"})}};
  write_manifest(job.out, manifest);

  if (!job.quiet) {
    log << "train " << train::to_string(job.algo) << " seed " << job.seed << ": "
        << trainer.state().gen.scalar_count() << " generator and " << trainer.state().disc.scalar_count()
        << " discriminator parameters\n";
  }
  write_file_atomic(curve_path, train::to_csv(curve));

  train::TrainHooks hooks;
  hooks.on_eval = [&](const train::CurveRow& row, const train::Trainer& t) {
    write_file_atomic(curve_path, train::to_csv(curve));
    const Checkpoint ck = make_checkpoint(t);
    save_checkpoint(ck_last, ck);
    if (t.state().best_step == row.step) save_checkpoint(ck_best, ck);
    if (!job.quiet) {
      log << "step " << row.step << " loss " << row.loss.total << " return " << row.eval_return << " jsd "
          << row.eval_jsd << " freq_lower " << row.eval_freq_lower << "\n";
    }
  };

  try {
    train::train(trainer, curve, hooks);
  } catch (const DivergenceError& e) {
    write_file_atomic(curve_path, train::to_csv(curve));
    manifest["status"] = "diverged";
    manifest["error"] = e.what();
    manifest["finished"] = now_utc();
    manifest["files"] = json::array({"config.ini", "curve.csv"});
    if (fs::exists(ck_last)) manifest["files"].push_back("checkpoint_last_good.json");
    if (fs::exists(ck_best)) manifest["files"].push_back("checkpoint_best.json");
    write_manifest(job.out, manifest);
    throw;
  }

  write_file_atomic(curve_path, train::to_csv(curve));
  save_checkpoint(ck_final, make_checkpoint(trainer));
  TrainOutcome outcome;
  outcome.final_report = trainer.evaluate(true);
  write_file_atomic(report_path, metrics::report_csv_header() + metrics::to_csv_row(outcome.final_report));
  outcome.curve = std::move(curve);
  outcome.out_dir = job.out;

  manifest["status"] = "complete";
  manifest["finished"] = now_utc();
  manifest["files"] = json::array({"config.ini", "curve.csv", "final_report.csv", "checkpoint_final.json"});
  if (fs::exists(ck_best)) manifest["files"].push_back("checkpoint_best.json");
  if (fs::exists(ck_last)) manifest["files"].push_back("checkpoint_last_good.json");
  write_manifest(job.out, manifest);
  return outcome;
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::string canonical_algo(const std::string& name) { return train::to_string(train::parse_algo(name)); }

std::string opt_double(bool present, double v) { return present ? format_double(v) : std::string(); }

}  // namespace

// ---------------------------------------------------------------------------

std::string default_out_root() {
  const char* v = std::getenv("RTCLAB_OUT");
  return v != nullptr && *v != '\0' ? std::string(v) : std::string("rtclab-out");
}

ExperimentConfig load_experiment_config(const std::string& config_path, const std::vector<std::string>& overrides) {
  ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("override must be section.key=value: '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

std::vector<double> smooth(const std::vector<double>& xs, double decay) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(out.empty() ? x : decay * out.back() + (1.0 - decay) * x);
  return out;
}

double sign_test_p(int wins, int n) {
  if (n <= 0) return 1.0;
  if (wins < 0 || wins > n) throw std::invalid_argument("sign_test_p: wins out of range");
  // sum_{k >= wins} C(n, k) / 2^n, with log-binomials for stability
  double p = 0.0;
  for (int k = wins; k <= n; ++k) {
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  }
  return std::min(1.0, p);
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return std::nan("");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

// ---------------------------------------------------------------------------

std::string gen_data(const GenDataArgs& args, std::ostream& log) {
  if (args.n < 1) throw UsageError("--n must be >= 1");
  const ExperimentConfig cfg = load_experiment_config(args.config_path, args.overrides);
  ensure_dir(args.out);
  const std::string path = join_path(args.out, "dataset.csv");
  env::write_dataset(path, env::generate_dataset(args.n, args.seed, cfg.env));
  log << "wrote " << args.n << " episodes to " << path << "\n";
  return path;
}

TrainOutcome run_train(const TrainArgs& args, std::ostream& log) {
  TrainJob job;
  job.algo = train::parse_algo(args.algo);
  job.cfg = load_experiment_config(args.config_path, args.overrides);
  job.seed = args.seed;
  job.data = {args.data, args.data_seed};
  job.out = args.out;
  job.resume = args.resume;
  job.quiet = args.quiet;
  return run_job(job, log);
}

TrainOutcome replay_run(const std::string& manifest_path, const std::string& out, std::ostream& log) {
  const json m = read_json(manifest_path);
  try {
    if (m.at("format") != "rtclab-run" || m.at("command") != "train") throw IoError("not a training manifest");
    TrainJob job;
    job.algo = train::parse_algo(m.at("algo").get<std::string>());
    job.cfg = parse_config(m.at("config").get<std::string>());
    job.cfg.validate();
    job.seed = m.at("seed").get<std::uint64_t>();
    const json& d = m.at("data");
    if (d.at("source") == "file") {
      job.data.path = d.at("path").get<std::string>();
      if (git_blob_hash(read_file(job.data.path)) != d.at("hash").get<std::string>()) {
        throw IoError("dataset file changed since the run: " + job.data.path);
      }
    } else {
      job.data.seed = d.at("seed").get<std::uint64_t>();
    }
    job.out = out;
    job.quiet = true;
    return run_job(job, log);
  } catch (const json::exception& e) {
    throw IoError(manifest_path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

SweepRun summarize_curve(const train::LearningCurve& curve, double decay) {
  SweepRun r;
  if (curve.rows.empty()) throw std::invalid_argument("summarize_curve: empty curve");
  std::vector<double> ret, jsd, fl;
  for (const auto& row : curve.rows) {
    ret.push_back(row.eval_return);
    jsd.push_back(row.eval_jsd);
    fl.push_back(row.eval_freq_lower);
  }
  r.final_return = smooth(ret, decay).back();
  r.final_jsd = smooth(jsd, decay).back();
  r.final_freq_lower = smooth(fl, decay).back();
  return r;
}

SweepResult run_sweep(const SweepArgs& args, std::ostream& log) {
  if (args.seeds < 2) throw UsageError("--seeds must be >= 2");
  if (args.algos.empty()) throw UsageError("--algos needs at least one algorithm");
  std::vector<std::string> algos;
  for (const auto& a : args.algos) {
    const std::string c = canonical_algo(a);
    if (std::find(algos.begin(), algos.end(), c) == algos.end()) algos.push_back(c);
  }
  const ExperimentConfig cfg = load_experiment_config(args.config_path, args.overrides);
  ensure_dir(args.out);

  SweepResult result;
  for (const std::string& algo : algos) {
    for (int k = 0; k < args.seeds; ++k) {
      const std::uint64_t seed = args.seed_base + static_cast<std::uint64_t>(k);
      TrainJob job;
      job.algo = train::parse_algo(algo);
      job.cfg = cfg;
      job.seed = seed;
      job.data = {args.data, args.data_seed};
      job.out = join_path(join_path(args.out, algo), "seed_" + std::to_string(seed));
      job.quiet = true;

      SweepRun run;
      run.algo = algo;
      run.seed = seed;
      bool reused = false;
      const std::string manifest_path = join_path(job.out, "manifest.json");
      if (args.reuse && fs::exists(manifest_path)) {
        try {
          const json m = read_json(manifest_path);
          const std::string expected = serialize_config(train::effective_config(cfg, job.algo));
          if (m.at("status") == "complete" && m.at("config") == expected && m.at("algo") == algo &&
              m.at("seed").get<std::uint64_t>() == seed && m.at("data") == data_json(job.data, cfg)) {
            const auto curve = train::parse_curve_csv(read_file(join_path(job.out, "curve.csv")));
            const SweepRun s = summarize_curve(curve, cfg.eval.smoothing);
            run.final_return = s.final_return;
            run.final_jsd = s.final_jsd;
            run.final_freq_lower = s.final_freq_lower;
            run.status = "complete";
            reused = true;
          }
        } catch (const std::exception&) {
          reused = false;
        }
      }
      if (!reused) {
        try {
          const TrainOutcome o = run_job(job, log);
          const SweepRun s = summarize_curve(o.curve, cfg.eval.smoothing);
          run.final_return = s.final_return;
          run.final_jsd = s.final_jsd;
          run.final_freq_lower = s.final_freq_lower;
          run.status = "complete";
        } catch (const DivergenceError& e) {
          run.status = "diverged";
          log << "warning: " << algo << " seed " << seed << " diverged: " << e.what() << "\n";
        } catch (const std::exception& e) {
          run.status = "failed";
          log << "warning: " << algo << " seed " << seed << " failed: " << e.what() << "\n";
        }
      }
      log << algo << " seed " << seed << (reused ? " (reused)" : "") << ": " << run.status;
      if (run.status == "complete") {
        log << " return " << run.final_return << " jsd " << run.final_jsd << " freq_lower " << run.final_freq_lower;
      }
      log << "\n";
      result.runs.push_back(run);
    }
  }

  for (const std::string& algo : algos) {
    SweepSummaryRow row;
    row.algo = algo;
    std::vector<double> ret, jsd, fl;
    for (const auto& r : result.runs) {
      if (r.algo != algo) continue;
      if (r.status != "complete") {
        ++row.n_missing;
        continue;
      }
      ++row.n_ok;
      ret.push_back(r.final_return);
      jsd.push_back(r.final_jsd);
      fl.push_back(r.final_freq_lower);
    }
    row.return_mean = mean(ret);
    row.return_std = stddev(ret);
    row.jsd_mean = mean(jsd);
    row.jsd_std = stddev(jsd);
    row.freq_lower_mean = mean(fl);
    row.freq_lower_std = stddev(fl);
    result.summary.push_back(row);
  }

  auto paired_test = [&](const std::string& metric, const std::string& a, const std::string& b, bool a_less) {
    if (std::find(algos.begin(), algos.end(), a) == algos.end() ||
        std::find(algos.begin(), algos.end(), b) == algos.end()) {
      return;
    }
    SignTest t{metric, a, b, a_less ? "a<b" : "a>b", 0, 0, 1.0};
    auto value = [&](const SweepRun& r) {
      return metric == "eval_jsd" ? r.final_jsd : metric == "eval_return" ? r.final_return : r.final_freq_lower;
    };
    for (const auto& ra : result.runs) {
      if (ra.algo != a || ra.status != "complete") continue;
      for (const auto& rb : result.runs) {
        if (rb.algo != b || rb.seed != ra.seed || rb.status != "complete") continue;
        const double va = value(ra), vb = value(rb);
        if (va == vb) continue;
        ++t.n_pairs;
        if (a_less ? va < vb : va > vb) ++t.wins;
      }
    }
    t.p_value = sign_test_p(t.wins, t.n_pairs);
    result.tests.push_back(t);
  };
  paired_test("eval_jsd", "rtc", "mgail", true);
  paired_test("eval_return", "mgail", "bc", false);
  paired_test("eval_return", "naive", "rtc", true);

  std::string csv = "kind,algo,seed,status,n_ok,n_missing,return,return_std,jsd,jsd_std,freq_lower,freq_lower_std\n";
  for (const auto& r : result.runs) {
    const bool ok = r.status == "complete";
    csv += "run," + r.algo + "," + std::to_string(r.seed) + "," + r.status + ",,," + opt_double(ok, r.final_return) +
           ",," + opt_double(ok, r.final_jsd) + ",," + opt_double(ok, r.final_freq_lower) + ",\n";
  }
  for (const auto& s : result.summary) {
    const bool ok = s.n_ok > 0;
    csv += "summary," + s.algo + ",," + (s.n_missing == 0 ? "ok" : "missing") + "," + std::to_string(s.n_ok) + "," +
           std::to_string(s.n_missing) + "," + opt_double(ok, s.return_mean) + "," + opt_double(ok, s.return_std) +
           "," + opt_double(ok, s.jsd_mean) + "," + opt_double(ok, s.jsd_std) + "," +
           opt_double(ok, s.freq_lower_mean) + "," + opt_double(ok, s.freq_lower_std) + "\n";
  }
  write_file_atomic(join_path(args.out, "sweep.csv"), csv);

  std::string tests = "metric,algo_a,algo_b,direction,n_pairs,wins,p_value\n";
  for (const auto& t : result.tests) {
    tests += t.metric + "," + t.algo_a + "," + t.algo_b + "," + t.direction + "," + std::to_string(t.n_pairs) + "," +
             std::to_string(t.wins) + "," + format_double(t.p_value) + "\n";
  }
  write_file_atomic(join_path(args.out, "sign_tests.csv"), tests);

  log << "\nalgo      n  return (mean +- sd)   jsd (mean +- sd)      freq_lower (mean +- sd)\n";
  for (const auto& s : result.summary) {
    char line[256];
    std::snprintf(line, sizeof line, "%-8s %2d  %8.4f +- %-8.4f  %8.5f +- %-8.5f  %7.4f +- %-7.4f%s\n", s.algo.c_str(),
                  s.n_ok, s.return_mean, s.return_std, s.jsd_mean, s.jsd_std, s.freq_lower_mean, s.freq_lower_std,
                  s.n_missing > 0 ? "  (missing runs)" : "");
    log << line;
  }
  for (const auto& t : result.tests) {
    log << "sign test " << t.metric << ": " << t.algo_a << (t.direction == "a<b" ? " < " : " > ") << t.algo_b << " in "
        << t.wins << "/" << t.n_pairs << " seeds, p = " << t.p_value << "\n";
  }
  return result;
}

// ---------------------------------------------------------------------------

int analyze_theorem(const TheoremArgs& args, std::ostream& out) {
  if (!args.out.empty()) ensure_dir(args.out);
  int code = kOk;
  if (args.sweep > 0) {
    const theory::SweepSummary s = theory::random_world_sweep(args.sweep, Rng(args.seed, "sweep"));
    std::string text = "worlds " + std::to_string(s.worlds) + "\n" +
                       "excluded (imperfect reconstruction) " + std::to_string(s.excluded_reconstruction) + "\n" +
                       "theorem applicable " + std::to_string(s.theorem_applicable) + "\n" +
                       "conclusion violations " + std::to_string(s.conclusion_violations) + "\n" +
                       "entropy claim failures " + std::to_string(s.entropy_claim_failures) + "\n" +
                       "proof step failures " + std::to_string(s.proof_step_failures) + "\n" +
                       "corollary applicable " + std::to_string(s.corollary_applicable) + "\n" +
                       "corollary counterexamples " + std::to_string(s.corollary_violations) + "\n";
    out << text;
    if (!args.out.empty()) write_file_atomic(join_path(args.out, "sweep.txt"), text);
    return s.conclusion_violations > 0 ? kViolation : kOk;
  }

  if (args.solution != 1 && args.solution != 2) throw UsageError("--solution must be 1 or 2");
  std::vector<double> eps = args.epsilons;
  if (eps.empty()) eps = {0.0, 0.1, 0.25, 0.4};
  std::string csv = "solution,epsilon," + theory::info_csv_header();
  for (double e : eps) {
    if (!(e >= 0.0 && e < 0.5)) throw UsageError("epsilon must lie in [0, 0.5), got " + format_double(e));
    const theory::DiscreteWorld w = theory::build_traffic_world(e, args.solution);
    const theory::InfoReport r = theory::verify_theorem(w);
    const Eigen::MatrixXd test = w.test_policy();
    const Eigen::VectorXd prior = w.prior();
    out << "solution " << args.solution << " epsilon " << format_double(e) << "\n"
        << "  H(A|Ge) " << format_double(r.h_a_given_ge) << "  I(S,A) " << format_double(r.i_s_a) << "  I(S,Ahat) "
        << format_double(r.i_s_ahat) << "  H(Ahat|Gp) " << format_double(r.h_ahat_given_gp) << "\n"
        << "  H(A|S) " << format_double(r.h_a_given_s) << "  H(Ahat|S) " << format_double(r.h_ahat_given_s)
        << "  interaction train " << format_double(r.interaction_train) << "  test "
        << format_double(r.interaction_test) << "\n"
        << "  prior P(g=1) " << format_double(prior(1)) << "  P(ahat != light | s) " << format_double(test(0, 1))
        << "\n"
        << "  reconstruction " << (r.reconstruction_ok ? "exact" : "imperfect") << ", preconditions "
        << (r.precondition_1 ? "1" : "-") << (r.precondition_2 ? "2" : "-") << ", theorem "
        << (r.theorem_applicable ? (r.conclusion_holds ? "holds" : "VIOLATED") : "not applicable") << ", corollary "
        << (r.corollary_applicable ? (r.corollary_holds ? "holds" : "fails") : "not applicable") << "\n";
    csv += std::to_string(args.solution) + "," + format_double(e) + "," + theory::to_csv_row(r);
    if (r.theorem_applicable && !r.conclusion_holds) code = kViolation;
  }
  out << "\n" << csv;
  if (!args.out.empty()) write_file_atomic(join_path(args.out, "theorem.csv"), csv);
  return code;
}

// ---------------------------------------------------------------------------

std::size_t plotdata(const std::string& runs_dir, const std::string& out, std::ostream& log) {
  if (!fs::is_directory(runs_dir)) throw IoError("runs directory '" + runs_dir + "' does not exist");
  struct Run {
    std::string algo;
    std::uint64_t seed;
    std::string dir;
    train::LearningCurve curve;
  };
  std::vector<fs::path> manifests;
  for (const auto& entry : fs::recursive_directory_iterator(runs_dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "manifest.json") manifests.push_back(entry.path());
  }
  std::vector<Run> runs;
  for (const auto& p : manifests) {
    try {
      const json m = read_json(p.string());
      if (m.at("command") != "train") continue;
      Run r{m.at("algo").get<std::string>(), m.at("seed").get<std::uint64_t>(), p.parent_path().string(), {}};
      r.curve = train::parse_curve_csv(read_file((p.parent_path() / "curve.csv").string()));
      runs.push_back(std::move(r));
    } catch (const std::exception& e) {
      log << "warning: skipping " << p.string() << ": " << e.what() << "\n";
    }
  }
  std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) {
    return std::tie(a.algo, a.seed, a.dir) < std::tie(b.algo, b.seed, b.dir);
  });
  std::string csv = "algo,seed,step,metric,value\n";
  std::size_t rows = 0;
  for (const auto& r : runs) {
    for (const auto& row : r.curve.rows) {
      const std::pair<const char*, double> metrics[] = {
          {"eval_return", row.eval_return}, {"eval_jsd", row.eval_jsd}, {"eval_freq_lower", row.eval_freq_lower}};
      for (const auto& [name, value] : metrics) {
        csv += r.algo + "," + std::to_string(r.seed) + "," + std::to_string(row.step) + "," + name + "," +
               format_double(value) + "\n";
        ++rows;
      }
    }
  }
  ensure_dir(out);
  write_file_atomic(join_path(out, "plotdata.csv"), csv);
  return rows;
}

}  // namespace rtc::cli
