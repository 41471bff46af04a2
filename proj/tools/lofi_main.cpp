// Command-line front end: analyze CSV datasets with any of the estimators,
// simulate the built-in generators (with a ground-truth sidecar), run the
// verification suites, and convert stored result JSON into plot-ready CSV.
//
// Exit codes: 0 success; 1 verification found failing checks; 2 invalid
// configuration; 3 unreadable or malformed data; 4 computation failure.
#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lofi/csv.hpp"
#include "lofi/errors.hpp"
#include "lofi/inference.hpp"
#include "lofi/methods.hpp"
#include "lofi/report_io.hpp"
#include "lofi/verify.hpp"
#include "lofi/version.hpp"

namespace {

using lofi::ordered_json;

class WallTimer {
 public:
  WallTimer() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Accept hyphenated spellings for learner/method names ("bagged-trees").
std::string normalized(std::string s) {
  for (char& c : s)
    if (c == '-') c = '_';
  return s;
}

/// Map --cond-set entries (feature names, or zero-based indices as a
/// fallback) onto column indices.
std::vector<std::size_t> resolve_features(
    const std::vector<std::string>& tokens,
    const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  for (const auto& t : tokens) {
    const auto it = std::find(names.begin(), names.end(), t);
    if (it != names.end()) {
      idx.push_back(static_cast<std::size_t>(it - names.begin()));
      continue;
    }
    std::size_t pos = 0;
    long v = -1;
    try {
      v = std::stol(t, &pos);
    } catch (...) {
      pos = 0;
    }
    if (pos != t.size() || v < 0 || v >= static_cast<long>(names.size())) {
      std::string known;
      for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
      throw lofi::ConfigError("--cond-set entry '" + t +
                              "' is neither a feature name nor a column "
                              "index (features: " +
                              known + ")");
    }
    idx.push_back(static_cast<std::size_t>(v));
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

std::string sidecar_path(const std::string& csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() &&
      csv_path.compare(csv_path.size() - suffix.size(), suffix.size(),
                       suffix) == 0)
    return csv_path.substr(0, csv_path.size() - suffix.size()) +
           ".truth.json";
  return csv_path + ".truth.json";
}

// ---- analyze ----

struct AnalyzeArgs {
  std::string data, target, method, out;
  std::string learner = "ols";
  std::string loss = "l2";
  std::string sampler;
  std::string csv;
  std::vector<std::string> cond_set;
  std::size_t reps = 5;
  std::size_t mc_draws = 50;
  std::uint64_t seed = 1;
  double train_fraction = 0.7;
  std::size_t ci_resamples = 0;
  double level = 0.95;
};

ordered_json analyze_config(const AnalyzeArgs& a, int threads) {
  ordered_json cfg;
  cfg["command"] = "analyze";
  cfg["version"] = lofi::version;
  cfg["data"] = a.data;
  cfg["target"] = a.target;
  cfg["method"] = normalized(a.method);
  cfg["loss"] = a.loss;
  cfg["learner"] = normalized(a.learner);
  cfg["sampler"] = a.sampler;
  cfg["reps"] = a.reps;
  cfg["mc_draws"] = a.mc_draws;
  cfg["cond_set"] = a.cond_set;
  cfg["seed"] = a.seed;
  cfg["train_fraction"] = a.train_fraction;
  cfg["ci_resamples"] = a.ci_resamples;
  cfg["level"] = a.level;
  cfg["threads"] = threads;
  return cfg;
}

int run_analyze(const AnalyzeArgs& a, int threads) {
  lofi::require_config(a.train_fraction > 0.0 && a.train_fraction < 1.0,
                       "--train-fraction must be in (0, 1)");
  lofi::require_config(a.reps >= 1, "--reps must be >= 1");
  lofi::require_config(a.mc_draws >= 1, "--mc-draws must be >= 1");

  const lofi::Dataset data = lofi::read_csv(a.data, a.target);

  lofi::MethodSpec spec;
  spec.method = normalized(a.method);
  spec.learner = normalized(a.learner);
  spec.loss = lofi::LossFunction::parse(a.loss);
  spec.sampler = a.sampler;
  spec.n_reps = a.reps;
  spec.mc_draws = a.mc_draws;
  spec.conditioning = resolve_features(a.cond_set, data.feature_names);
  if (spec.method == "rfi" && spec.conditioning.empty())
    throw lofi::ConfigError(
        "method 'rfi' measures importance relative to a conditioning set: "
        "pass --cond-set with one or more feature names, e.g. --cond-set "
        "x1,x2");
  if (spec.loss.kind == lofi::LossKind::ce)
    for (double y : data.y)
      lofi::require_data(y == 0.0 || y == 1.0,
                         "cross-entropy loss needs a binary 0/1 target, but "
                         "column '" +
                             a.target + "' has other values");

  const lofi::FiComputer computer = lofi::make_fi_computer(spec);

  WallTimer timer;
  lofi::FiResult result;
  if (a.ci_resamples >= 2) {
    lofi::CiOptions ci;
    ci.n_resamples = a.ci_resamples;
    ci.level = a.level;
    ci.train_fraction = a.train_fraction;
    result = lofi::learner_fi_ci(data, computer, a.seed, ci);
  } else {
    const lofi::Split s = lofi::split(data.n(), a.train_fraction, a.seed);
    result = computer(data.subset_rows(s.train), data.subset_rows(s.test),
                      a.seed);
    lofi::apply_wald_ci(result, a.level);
    lofi::attach_paired_tests(result);
  }
  const double runtime_ms = timer.elapsed_ms();

  const ordered_json out =
      lofi::fi_result_to_json(result, a.seed, analyze_config(a, threads),
                              runtime_ms);
  lofi::write_json_file(a.out, out);
  if (!a.csv.empty())
    lofi::write_text_file(a.csv, lofi::fi_result_to_csv(result));

  // ranked summary, largest importance first
  std::vector<std::size_t> order(result.features.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return result.features[x].importance > result.features[y].importance;
  });
  std::printf("method=%s loss=%s learner=%s seed=%llu rows=%zu features=%zu\n",
              result.method.c_str(), result.loss.c_str(),
              result.learner.c_str(), static_cast<unsigned long long>(a.seed),
              data.n(), data.p());
  std::printf("%4s  %-24s %12s %12s %12s %12s %10s\n", "rank", "feature",
              "importance", "std_error", "ci_low", "ci_high", "p_value");
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& f = result.features[order[r]];
    std::printf("%4zu  %-24s %12.5g %12.5g %12.5g %12.5g %10.4g\n", r + 1,
                f.feature.c_str(), f.importance, f.std_error,
                f.ci_low.value_or(0.0), f.ci_high.value_or(0.0),
                f.p_value.value_or(std::nan("")));
  }
  std::printf("wrote %s\n", a.out.c_str());
  if (!a.csv.empty()) std::printf("wrote %s\n", a.csv.c_str());
  return 0;
}

// ---- simulate ----

struct SimulateArgs {
  std::string dgp;
  std::size_t n = 10000;
  std::uint64_t seed = 1;
  std::string out;
  std::string truth;
};

int run_simulate(const SimulateArgs& a, int threads) {
  const lofi::DgpSpec d = lofi::builtin_dgp(a.dgp);
  const lofi::Dataset data = d.sample(a.n, a.seed);
  const std::string out_path = a.out.empty() ? a.dgp + ".csv" : a.out;
  const std::string truth_path =
      a.truth.empty() ? sidecar_path(out_path) : a.truth;

  lofi::write_csv(out_path, data, "y");
  ordered_json cfg;
  cfg["command"] = "simulate";
  cfg["version"] = lofi::version;
  cfg["dgp"] = a.dgp;
  cfg["n"] = a.n;
  cfg["seed"] = a.seed;
  cfg["out"] = out_path;
  cfg["truth"] = truth_path;
  cfg["threads"] = threads;
  lofi::write_json_file(truth_path, lofi::ground_truth_to_json(d, cfg));

  std::printf("simulated %s: %zu rows, %zu features + target\n",
              d.name.c_str(), data.n(), data.p());
  std::printf("wrote %s\n", out_path.c_str());
  std::printf("wrote %s (ground-truth sidecar)\n", truth_path.c_str());
  return 0;
}

// ---- verify ----

struct VerifyArgs {
  std::string suite;
  std::uint64_t seed = 1;
  std::string out;
};

int run_verify(const VerifyArgs& a, int threads) {
  lofi::VerificationReport report;
  if (a.suite == "table1") {
    report = lofi::run_table1(a.seed);
  } else if (a.suite == "counterexamples") {
    report = lofi::run_counterexamples(a.seed);
  } else if (a.suite == "figure2") {
    report = lofi::run_figure2(a.seed);
  } else {
    throw lofi::ConfigError("unknown suite '" + a.suite +
                            "' (known: table1, counterexamples, figure2)");
  }

  for (const auto& c : report.checks) {
    std::string cond;
    for (const auto& g : c.conditioning) cond += (cond.empty() ? "" : ",") + g;
    std::printf("rule %2d [%-7s] %-9s %-6s %-16s %-3s G={%s}", c.rule_id,
                c.outcome.c_str(), c.method.c_str(), c.dgp.c_str(),
                c.model_kind.c_str(), c.feature.c_str(), cond.c_str());
    if (c.assumptions_met)
      std::printf(" estimate=%.5g se=%.3g", c.estimate, c.std_error);
    std::printf("  %s\n", c.reason.c_str());
  }
  for (const auto& c : report.counterexamples)
    std::printf("[%-9s] %-36s %-6s estimate=%.5g se=%.3g\n",
                c.confirmed ? "confirmed" : "FAILED", c.name.c_str(),
                c.dgp.c_str(), c.estimate, c.std_error);
  for (const auto& e : report.figure2)
    std::printf("%-18s %-9s %-3s mean=%+.4f sd=%.4f relative=%+.4f reps=%zu\n",
                e.learner.c_str(), e.method.c_str(), e.feature.c_str(),
                e.mean_importance, e.sd_importance, e.relative,
                e.repetitions);
  for (const auto& as : report.assertions)
    std::printf("[%s] %s\n", as.passed ? "ok" : "FAILED",
                as.description.c_str());

  if (!report.checks.empty()) {
    const auto covered = report.rules_covered();
    std::printf("summary: %zu pass, %zu fail, %zu vacuous; %zu/20 rules "
                "covered\n",
                report.n_outcome("pass"), report.n_outcome("fail"),
                report.n_outcome("vacuous"), covered.size());
  }
  std::printf("suite %s: %s (%.0f ms)\n", report.suite.c_str(),
              report.all_passed() ? "all checks passed" : "FAILURES",
              report.runtime_ms);

  if (!a.out.empty()) {
    ordered_json cfg;
    cfg["command"] = "verify";
    cfg["version"] = lofi::version;
    cfg["suite"] = a.suite;
    cfg["seed"] = a.seed;
    cfg["out"] = a.out;
    cfg["threads"] = threads;
    lofi::write_json_file(a.out, lofi::verification_to_json(report, cfg));
    std::printf("wrote %s\n", a.out.c_str());
  }
  return report.all_passed() ? 0 : 1;
}

// ---- report ----

struct ReportArgs {
  std::string in, out;
};

int run_report(const ReportArgs& a) {
  const ordered_json j = lofi::read_json_file(a.in);
  lofi::write_text_file(a.out, lofi::stored_json_to_csv(j));
  std::printf("wrote %s\n", a.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"loss-based feature importance: perturbation, "
               "marginalization, and refitting estimators with inference "
               "and a verification harness"};
  app.set_version_flag("--version", std::string(lofi::version));
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads,
                 "cap internal parallelism (this build runs sequentially)")
      ->check(CLI::PositiveNumber);

  AnalyzeArgs an;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "estimate feature importance on a CSV dataset");
  analyze->add_option("--data", an.data, "input CSV path")->required();
  analyze->add_option("--target", an.target, "target column name")
      ->required();
  analyze
      ->add_option("--method", an.method,
                   "pfi, cfi, rfi, msagevf, csagevf, scsagevf, msage, "
                   "csage, loco, wvim, swvim, loci")
      ->required();
  analyze->add_option("--learner", an.learner,
                      "constant, ols, ols-interactions, knn, bagged-trees, "
                      "logistic");
  analyze->add_option("--loss", an.loss, "l2 or ce");
  analyze->add_option("--sampler", an.sampler,
                      "conditional sampler: gaussian, knn, or oracle");
  analyze->add_option("--reps", an.reps, "replacement draws per estimate");
  analyze->add_option("--mc-draws", an.mc_draws,
                      "completion draws for reduced models");
  analyze
      ->add_option("--cond-set", an.cond_set,
                   "comma-separated conditioning features (names or column "
                   "indices)")
      ->delimiter(',');
  analyze->add_option("--seed", an.seed, "master seed");
  analyze->add_option("--train-fraction", an.train_fraction,
                      "train split fraction");
  analyze->add_option("--ci", an.ci_resamples,
                      "resampled confidence intervals: number of refit "
                      "resamples (>= 2 enables; default is a single split)");
  analyze->add_option("--level", an.level, "confidence level");
  analyze->add_option("--out", an.out, "output JSON path")->required();
  analyze->add_option("--csv", an.csv, "also write a flat CSV table here");

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "sample a built-in generator to CSV plus a ground-truth "
                  "sidecar");
  simulate
      ->add_option("--dgp", sim.dgp,
                   "generator name (dgp_a through dgp_g)")
      ->required();
  simulate->add_option("--n", sim.n, "number of rows");
  simulate->add_option("--seed", sim.seed, "master seed");
  simulate->add_option("--out", sim.out, "output CSV path (default "
                                         "<dgp>.csv)");
  simulate->add_option("--truth", sim.truth,
                       "sidecar JSON path (default <out>.truth.json)");

  VerifyArgs ver;
  CLI::App* verify = app.add_subcommand(
      "verify", "run a verification suite against the built-in generators");
  verify
      ->add_option("--suite", ver.suite,
                   "table1, counterexamples, or figure2")
      ->required();
  verify->add_option("--seed", ver.seed, "master seed");
  verify->add_option("--out", ver.out, "write the full report JSON here");

  ReportArgs rep;
  CLI::App* report = app.add_subcommand(
      "report", "convert a stored result JSON into tidy CSV for plotting");
  report->add_option("--in", rep.in, "result or verification JSON path")
      ->required();
  report->add_option("--out", rep.out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints message/usage
    return code == 0 ? 0 : 2;
  }

  try {
    if (*analyze) return run_analyze(an, threads);
    if (*simulate) return run_simulate(sim, threads);
    if (*verify) return run_verify(ver, threads);
    if (*report) return run_report(rep);
  } catch (const lofi::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const lofi::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const lofi::ComputeError& e) {
    std::fprintf(stderr, "compute error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
