#pragma once
//
// Uncertainty quantification for feature-importance estimates:
//
//   * paired t and sign-flip permutation tests on per-instance losses,
//   * learner-level confidence intervals across train/test resamples with
//     an overlap-corrected variance ((1/m + n_test/n_train) * S^2, because
//     resampled splits share rows and the naive 1/m is anti-conservative),
//   * null-importance p-values from refits against permuted targets,
//   * Holm and Benjamini-Hochberg multiplicity adjustments.
//
// A "computer" is any callable (train, test, seed) -> FiResult; every
// estimator family in the library can be wrapped into one, which is how the
// resampling procedures stay agnostic of the estimator.
//
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "lofi/dataset.hpp"
#include "lofi/errors.hpp"
#include "lofi/fi_result.hpp"
#include "lofi/resampling.hpp"
#include "lofi/rng.hpp"
#include "lofi/stats.hpp"

namespace lofi {

enum class Alternative { two_sided, greater };

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::string kind;
  std::size_t n = 0;
  Alternative alternative = Alternative::two_sided;
  bool degenerate = false;  // zero-variance differences
};

namespace detail {

/// One-sample location test of H0: E[d] = 0 on paired differences.
inline TestResult one_sample_t(const std::vector<double>& d, Alternative alt) {
  require_data(d.size() >= 3, "paired test: need at least 3 pairs");
  TestResult t;
  t.kind = "paired_t";
  t.n = d.size();
  t.alternative = alt;
  const double m = mean(d);
  const double sd = sample_sd(d);
  if (sd == 0.0) {
    t.degenerate = true;
    t.statistic = 0.0;
    t.p_value = 1.0;
    return t;
  }
  const double n = static_cast<double>(d.size());
  t.statistic = m / (sd / std::sqrt(n));
  const double dof = n - 1.0;
  if (alt == Alternative::two_sided)
    t.p_value = t_two_sided_p(t.statistic, dof);
  else
    t.p_value = 1.0 - student_t_cdf(t.statistic, dof);
  return t;
}

inline std::vector<double> paired_differences(const std::vector<double>& before,
                                              const std::vector<double>& after) {
  require_data(before.size() == after.size(),
               "paired test: vectors differ in length");
  std::vector<double> d(before.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = after[i] - before[i];
  return d;
}

}  // namespace detail

/// Paired t-test on per-instance losses; the statistic is positive when the
/// "after" losses are larger (e.g. after perturbing a useful feature).
inline TestResult paired_t_test(const std::vector<double>& losses_before,
                                const std::vector<double>& losses_after,
                                Alternative alt = Alternative::two_sided) {
  return detail::one_sample_t(detail::paired_differences(losses_before,
                                                         losses_after),
                              alt);
}

/// Sign-flip permutation test on the paired loss differences. The null
/// symmetrizes each difference around zero; the p-value uses the +1
/// convention so it is never exactly 0.
inline TestResult permutation_test(const std::vector<double>& losses_before,
                                   const std::vector<double>& losses_after,
                                   std::size_t n_perms, std::uint64_t seed,
                                   Alternative alt = Alternative::two_sided) {
  require_config(n_perms >= 1, "permutation_test: n_perms must be >= 1");
  const std::vector<double> d =
      detail::paired_differences(losses_before, losses_after);
  require_data(d.size() >= 3, "paired test: need at least 3 pairs");
  TestResult t;
  t.kind = "sign_flip_permutation";
  t.n = d.size();
  t.alternative = alt;
  if (sample_sd(d) == 0.0) {
    t.degenerate = true;
    t.statistic = 0.0;
    t.p_value = 1.0;
    return t;
  }
  const double obs = mean(d);
  t.statistic = obs;
  Rng rng(derive_seed(seed, {seed_domain::null_perm}));
  std::size_t at_least = 0;
  for (std::size_t b = 0; b < n_perms; ++b) {
    double sum = 0.0;
    for (double v : d) sum += (rng.bits() & 1u) ? v : -v;
    const double stat = sum / static_cast<double>(d.size());
    const bool extreme = alt == Alternative::two_sided
                             ? std::abs(stat) >= std::abs(obs)
                             : stat >= obs;
    if (extreme) ++at_least;
  }
  t.p_value = static_cast<double>(1 + at_least) /
              static_cast<double>(n_perms + 1);
  return t;
}

/// Step-down (holm) or step-up (benjamini-hochberg) p-value adjustment.
inline std::vector<double> adjust_pvalues(const std::vector<double>& p,
                                          const std::string& method) {
  for (double v : p)
    require_config(v >= 0.0 && v <= 1.0,
                   "adjust_pvalues: p-values must lie in [0, 1]");
  const bool holm = method == "holm";
  const bool bh = method == "benjamini-hochberg" || method == "bh";
  require_config(holm || bh, "adjust_pvalues: unknown method '" + method +
                                 "' (expected holm or benjamini-hochberg)");
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

  std::vector<double> adj(m);
  if (holm) {
    double running = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double scaled =
          std::min(1.0, static_cast<double>(m - i) * p[order[i]]);
      running = std::max(running, scaled);
      adj[order[i]] = running;
    }
  } else {
    double running = 1.0;
    for (std::size_t i = m; i-- > 0;) {
      const double scaled = std::min(
          1.0, static_cast<double>(m) * p[order[i]] /
                   static_cast<double>(i + 1));
      running = std::min(running, scaled);
      adj[order[i]] = running;
    }
  }
  return adj;
}

/// Any feature-importance procedure expressed as (train, test, seed).
using FiComputer =
    std::function<FiResult(const Dataset& train, const Dataset& test,
                           std::uint64_t seed)>;

struct CiOptions {
  std::size_t n_resamples = 15;
  double level = 0.95;
  double train_fraction = 0.7;
};

/// Repeat the whole estimate-on-a-fresh-split pipeline n_resamples times and
/// report per-feature Wald intervals. The variance across resamples is
/// inflated by (1/m + n_test/n_train) instead of 1/m because the resampled
/// splits overlap; this is recorded in the notes.
inline FiResult learner_fi_ci(const Dataset& data, const FiComputer& fi,
                              std::uint64_t seed, CiOptions opt = {}) {
  require_config(opt.n_resamples >= 2, "learner_fi_ci: need >= 2 resamples");
  require_config(opt.level > 0.0 && opt.level < 1.0,
                 "learner_fi_ci: level must be in (0, 1)");
  const std::size_t m = opt.n_resamples;

  std::vector<FiResult> reps;
  reps.reserve(m);
  double test_train_ratio = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const std::uint64_t rep_seed = derive_seed(seed, {seed_domain::resample, r});
    const Split s = split(data.n(), opt.train_fraction, rep_seed);
    test_train_ratio = static_cast<double>(s.test.size()) /
                       static_cast<double>(s.train.size());
    reps.push_back(
        fi(data.subset_rows(s.train), data.subset_rows(s.test), rep_seed));
    require_compute(reps.back().features.size() == reps.front().features.size(),
                    "learner_fi_ci: feature sets differ across resamples");
  }

  FiResult out;
  out.method = reps.front().method;
  out.loss = reps.front().loss;
  out.learner = reps.front().learner;
  out.conditioning = reps.front().conditioning;
  out.notes = reps.front().notes;
  out.notes.push_back("ci=wald");
  out.notes.push_back("level=" + std::to_string(opt.level));
  out.notes.push_back("n_resamples=" + std::to_string(m));
  out.notes.push_back("variance_correction=1/m+n_test/n_train");

  const double z = normal_quantile(1.0 - (1.0 - opt.level) / 2.0);
  const double correction =
      1.0 / static_cast<double>(m) + test_train_ratio;
  for (std::size_t j = 0; j < reps.front().features.size(); ++j) {
    FiEstimate e;
    e.feature = reps.front().features[j].feature;
    e.per_rep.reserve(m);
    for (const auto& rep : reps) {
      require_compute(rep.features[j].feature == e.feature,
                      "learner_fi_ci: feature order changed across resamples");
      e.per_rep.push_back(rep.features[j].importance);
    }
    e.importance = mean(e.per_rep);
    const double s2 = sample_variance(e.per_rep);
    e.std_error = std::sqrt(correction * s2);
    e.ci_low = e.importance - z * e.std_error;
    e.ci_high = e.importance + z * e.std_error;
    if (s2 == 0.0)
      out.notes.push_back("degenerate_variance feature=" + e.feature);
    else
      e.p_value = 2.0 * (1.0 - normal_cdf(std::abs(e.importance) / e.std_error));
    out.features.push_back(std::move(e));
  }
  return out;
}

/// Fill Wald intervals from the estimates' own standard errors (used for
/// single-split results, whose std_error is the paired per-instance one, and
/// for sampled attributions, whose std_error spans sampling iterations).
inline void apply_wald_ci(FiResult& r, double level = 0.95) {
  require_config(level > 0.0 && level < 1.0,
                 "apply_wald_ci: level must be in (0, 1)");
  const double z = normal_quantile(1.0 - (1.0 - level) / 2.0);
  for (auto& f : r.features) {
    f.ci_low = f.importance - z * f.std_error;
    f.ci_high = f.importance + z * f.std_error;
  }
  r.notes.push_back("ci=wald");
  r.notes.push_back("level=" + std::to_string(level));
}

/// Per-feature paired tests of H0 "importance = 0" from the stored
/// per-instance contributions.
inline void attach_paired_tests(FiResult& r,
                                Alternative alt = Alternative::two_sided) {
  for (auto& f : r.features) {
    if (f.per_instance.size() < 3) continue;
    f.p_value = detail::one_sample_t(f.per_instance, alt).p_value;
  }
  r.notes.push_back(std::string("p=paired_t ") +
                    (alt == Alternative::two_sided ? "two-sided" : "greater"));
}

struct PimpOptions {
  std::size_t m_nulls = 50;
  double train_fraction = 0.7;
};

/// Importances recomputed against independently permuted targets.
struct NullImportanceSet {
  std::vector<std::string> features;
  std::vector<std::vector<double>> importances;  // [feature][null run]
  std::size_t count = 0;
};

struct PimpResult {
  FiResult observed;  // p_value filled per feature
  NullImportanceSet nulls;
};

/// Permutation-importance p-values: break the feature-target association by
/// permuting y, refit/re-estimate, and rank the observed importance within
/// the null importances. p = (1 + #{null >= observed}) / (m + 1).
inline PimpResult pimp(const Dataset& data, const FiComputer& fi,
                       std::uint64_t seed, PimpOptions opt = {}) {
  require_config(opt.m_nulls >= 20, "pimp: need at least 20 null refits");

  const auto run = [&](const Dataset& d, std::uint64_t run_seed) {
    const Split s = split(d.n(), opt.train_fraction, run_seed);
    return fi(d.subset_rows(s.train), d.subset_rows(s.test), run_seed);
  };

  PimpResult out;
  out.observed = run(data, derive_seed(seed, {seed_domain::resample}));
  out.nulls.count = opt.m_nulls;
  for (const auto& f : out.observed.features) {
    out.nulls.features.push_back(f.feature);
    out.nulls.importances.emplace_back();
  }

  for (std::size_t b = 0; b < opt.m_nulls; ++b) {
    const std::uint64_t null_seed =
        derive_seed(seed, {seed_domain::null_perm, b});
    Dataset shuffled = data;
    Rng rng(null_seed);
    const std::vector<std::size_t> perm = rng.permutation(data.n());
    for (std::size_t i = 0; i < data.n(); ++i)
      shuffled.y[i] = data.y[perm[i]];
    const FiResult null_run = run(shuffled, null_seed);
    require_compute(null_run.features.size() == out.observed.features.size(),
                    "pimp: feature sets differ between null runs");
    for (std::size_t j = 0; j < null_run.features.size(); ++j)
      out.nulls.importances[j].push_back(null_run.features[j].importance);
  }

  for (std::size_t j = 0; j < out.observed.features.size(); ++j) {
    std::size_t at_least = 0;
    for (double v : out.nulls.importances[j])
      if (v >= out.observed.features[j].importance) ++at_least;
    out.observed.features[j].p_value =
        static_cast<double>(1 + at_least) /
        static_cast<double>(opt.m_nulls + 1);
  }
  out.observed.notes.push_back("p=pimp m_nulls=" + std::to_string(opt.m_nulls));
  return out;
}

}  // namespace lofi
