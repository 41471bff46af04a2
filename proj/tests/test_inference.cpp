// Inference layer: paired tests on per-instance losses, resampled Wald
// intervals with overlap-corrected variance, null-importance p-values, and
// multiplicity adjustments. Frozen numbers come from independent numeric
// integration / hand computation.
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lofi/dgp.hpp"
#include "lofi/inference.hpp"
#include "lofi/methods.hpp"

using namespace lofi;

namespace {
constexpr std::uint64_t kSeed = 53;
}

TEST_CASE("holm and benjamini-hochberg reproduce hand-computed triples") {
  const std::vector<double> p = {0.01, 0.02, 0.03};
  const auto holm = adjust_pvalues(p, "holm");
  CHECK_THAT(holm[0], Catch::Matchers::WithinAbs(0.03, 1e-15));
  CHECK_THAT(holm[1], Catch::Matchers::WithinAbs(0.04, 1e-15));
  CHECK_THAT(holm[2], Catch::Matchers::WithinAbs(0.04, 1e-15));
  const auto bh = adjust_pvalues(p, "benjamini-hochberg");
  CHECK_THAT(bh[0], Catch::Matchers::WithinAbs(0.03, 1e-15));
  CHECK_THAT(bh[1], Catch::Matchers::WithinAbs(0.03, 1e-15));
  CHECK_THAT(bh[2], Catch::Matchers::WithinAbs(0.03, 1e-15));

  // Results are reported in the input order, not the sorted order.
  const std::vector<double> shuffled = {0.03, 0.01, 0.02};
  const auto hs = adjust_pvalues(shuffled, "holm");
  CHECK_THAT(hs[0], Catch::Matchers::WithinAbs(0.04, 1e-15));
  CHECK_THAT(hs[1], Catch::Matchers::WithinAbs(0.03, 1e-15));
  CHECK_THAT(hs[2], Catch::Matchers::WithinAbs(0.04, 1e-15));
  const auto bs = adjust_pvalues(shuffled, "bh");
  CHECK_THAT(bs[0], Catch::Matchers::WithinAbs(0.03, 1e-15));
  CHECK_THAT(bs[1], Catch::Matchers::WithinAbs(0.03, 1e-15));
  CHECK_THAT(bs[2], Catch::Matchers::WithinAbs(0.03, 1e-15));
}

TEST_CASE("adjustment properties: dominance, clipping, single input") {
  CHECK(adjust_pvalues({0.2}, "holm")[0] == 0.2);
  CHECK(adjust_pvalues({0.2}, "bh")[0] == 0.2);

  // Random-ish panel: adjusted >= raw, holm >= bh, everything clipped to 1.
  const std::vector<double> p = {0.9, 0.001, 0.25, 0.6, 0.04, 0.04, 1.0};
  const auto holm = adjust_pvalues(p, "holm");
  const auto bh = adjust_pvalues(p, "bh");
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(holm[i] >= p[i]);
    CHECK(bh[i] >= p[i]);
    CHECK(holm[i] >= bh[i]);
    CHECK(holm[i] <= 1.0);
    CHECK(bh[i] <= 1.0);
  }

  CHECK_THROWS_AS(adjust_pvalues({0.5, 1.2}, "holm"), ConfigError);
  CHECK_THROWS_AS(adjust_pvalues({-0.1}, "bh"), ConfigError);
  CHECK_THROWS_AS(adjust_pvalues({0.5}, "bonferroni"), ConfigError);
}

TEST_CASE("paired t-test matches a numerically integrated reference") {
  const std::vector<double> before(5, 0.0);
  const std::vector<double> after = {1.0, 2.0, 3.0, 4.0, 5.0};
  const TestResult t = paired_t_test(before, after);
  CHECK(t.kind == "paired_t");
  CHECK(t.n == 5);
  CHECK_THAT(t.statistic, Catch::Matchers::WithinAbs(4.2426406871, 1e-9));
  CHECK_THAT(t.p_value, Catch::Matchers::WithinAbs(0.0132355958, 1e-6));
  CHECK_FALSE(t.degenerate);

  const TestResult g =
      paired_t_test(before, after, Alternative::greater);
  CHECK_THAT(g.p_value, Catch::Matchers::WithinAbs(0.0132355958 / 2, 1e-6));
}

TEST_CASE("degenerate paired differences are flagged with p = 1") {
  const std::vector<double> v = {0.3, 1.7, 2.2, 0.0, -4.0};
  const TestResult t = paired_t_test(v, v);
  CHECK(t.statistic == 0.0);
  CHECK(t.p_value == 1.0);
  CHECK(t.degenerate);

  // Constant nonzero shift still counts as zero-variance differences
  // (dyadic values keep the shift exactly representable).
  const std::vector<double> base = {0.25, 1.5, 2.25, 0.0, -4.0};
  std::vector<double> shifted = base;
  for (double& x : shifted) x += 0.5;
  CHECK(paired_t_test(base, shifted).degenerate);
  CHECK(permutation_test(base, shifted, 100, kSeed).degenerate);
  CHECK(permutation_test(base, shifted, 100, kSeed).p_value == 1.0);

  CHECK_THROWS_AS(paired_t_test({1.0, 2.0}, {1.0, 2.0}), DataError);
  CHECK_THROWS_AS(paired_t_test({1.0, 2.0, 3.0}, {1.0}), DataError);
}

TEST_CASE("sign-flip permutation test agrees with t on gaussian differences") {
  Rng rng(kSeed);
  std::vector<double> gaps;
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> before(200, 0.0), after(200);
    for (auto& a : after) a = 0.05 + rng.normal();
    const double pt = paired_t_test(before, after).p_value;
    const double pp =
        permutation_test(before, after, 4000, kSeed + trial).p_value;
    gaps.push_back(std::abs(pt - pp));
  }
  std::sort(gaps.begin(), gaps.end());
  CHECK(gaps[gaps.size() / 2] <= 0.02);  // median gap
}

TEST_CASE("permutation test is deterministic and never reports zero") {
  const std::vector<double> before(50, 0.0);
  std::vector<double> after(50);
  Rng rng(kSeed);
  for (auto& a : after) a = 2.0 + 0.1 * rng.normal();  // overwhelming effect
  const TestResult a = permutation_test(before, after, 99, 7);
  const TestResult b = permutation_test(before, after, 99, 7);
  CHECK(a.p_value == b.p_value);
  CHECK(a.p_value >= 1.0 / 100.0);  // +1 convention floor
  CHECK(a.p_value <= 0.02);
}

TEST_CASE("resampled wald intervals separate strong from weak features") {
  const DgpSpec g = builtin_dgp("dgp_g");
  const Dataset d = g.sample(5000, kSeed);
  MethodSpec spec;
  spec.method = "pfi";
  spec.learner = "ols";
  CiOptions opt;
  opt.n_resamples = 10;
  const FiResult r = learner_fi_ci(d, make_fi_computer(spec), kSeed, opt);

  REQUIRE(r.features.size() == 2);
  CHECK(r.method == "pfi");
  CHECK_THAT(r.features[0].importance, Catch::Matchers::WithinAbs(2.0, 0.4));
  CHECK_THAT(r.features[1].importance, Catch::Matchers::WithinAbs(8.0, 1.2));
  REQUIRE(r.features[0].ci_high.has_value());
  REQUIRE(r.features[1].ci_low.has_value());
  // Effect sizes 8 vs 2: the intervals must not overlap at n = 5000.
  // (Coverage of the population values is a statistical property, checked
  // over repeated simulations in the acceptance suite, not per draw.)
  CHECK(*r.features[1].ci_low > *r.features[0].ci_high);
  CHECK(*r.features[0].ci_low < *r.features[0].ci_high);
  CHECK(*r.features[1].ci_high - *r.features[1].ci_low < 1.5);
  for (const auto& f : r.features) {
    REQUIRE(f.per_rep.size() == 10);
    // The reported variance is (1/m + n_test/n_train) * S^2, never 1/m * S^2.
    const double s2 = sample_variance(f.per_rep);
    const double expected = (1.0 / 10.0 + 1500.0 / 3500.0) * s2;
    CHECK_THAT(f.std_error * f.std_error,
               Catch::Matchers::WithinRel(expected, 1e-12));
    CHECK(f.p_value.has_value());
    CHECK(*f.p_value < 0.01);
  }
  bool corr_note = false;
  for (const auto& n : r.notes)
    if (n == "variance_correction=1/m+n_test/n_train") corr_note = true;
  CHECK(corr_note);
}

TEST_CASE("degenerate resamples collapse to a zero-width interval") {
  const DgpSpec g = builtin_dgp("dgp_g");
  const Dataset d = g.sample(60, kSeed);
  const FiComputer constant_fi = [](const Dataset&, const Dataset&,
                                    std::uint64_t) {
    FiResult r;
    r.method = "stub";
    FiEstimate e;
    e.feature = "x1";
    e.importance = 1.0;
    r.features.push_back(e);
    return r;
  };
  CiOptions opt;
  opt.n_resamples = 3;
  const FiResult r = learner_fi_ci(d, constant_fi, kSeed, opt);
  CHECK(r.features[0].std_error == 0.0);
  CHECK(*r.features[0].ci_low == 1.0);
  CHECK(*r.features[0].ci_high == 1.0);
  bool warned = false;
  for (const auto& n : r.notes)
    if (n == "degenerate_variance feature=x1") warned = true;
  CHECK(warned);

  CHECK_THROWS_AS(learner_fi_ci(d, constant_fi, kSeed, CiOptions{1, 0.95, 0.7}),
                  ConfigError);
}

TEST_CASE("interval width shrinks like one over root n") {
  const DgpSpec g = builtin_dgp("dgp_g");
  MethodSpec spec;
  spec.method = "pfi";
  spec.learner = "ols";
  const FiComputer fi = make_fi_computer(spec);
  CiOptions opt;
  opt.n_resamples = 8;

  double w_small = 0.0, w_large = 0.0;
  for (int sim = 0; sim < 40; ++sim) {
    const Dataset small = g.sample(1000, kSeed + 100 + sim);
    const Dataset large = g.sample(2000, kSeed + 200 + sim);
    const FiResult rs = learner_fi_ci(small, fi, kSeed + sim, opt);
    const FiResult rl = learner_fi_ci(large, fi, kSeed + sim, opt);
    w_small += *rs.features[1].ci_high - *rs.features[1].ci_low;
    w_large += *rl.features[1].ci_high - *rl.features[1].ci_low;
  }
  const double ratio = w_large / w_small;
  CHECK(ratio > 0.6);
  CHECK(ratio < 0.85);  // ~ 1/sqrt(2)
}

TEST_CASE("wald helper fills intervals from existing standard errors") {
  FiResult r;
  FiEstimate e;
  e.feature = "x1";
  e.importance = 3.0;
  e.std_error = 0.5;
  r.features.push_back(e);
  apply_wald_ci(r, 0.95);
  CHECK_THAT(*r.features[0].ci_low,
             Catch::Matchers::WithinAbs(3.0 - 1.959964 * 0.5, 1e-4));
  CHECK_THAT(*r.features[0].ci_high,
             Catch::Matchers::WithinAbs(3.0 + 1.959964 * 0.5, 1e-4));
  CHECK_THROWS_AS(apply_wald_ci(r, 1.5), ConfigError);
}

TEST_CASE("paired tests attach to per-instance contributions") {
  const DgpSpec g = builtin_dgp("dgp_g");
  const Dataset train = g.sample(2000, kSeed);
  const Dataset test = g.sample(2000, kSeed + 1);
  MethodSpec spec;
  spec.method = "pfi";
  spec.learner = "ols";
  FiResult r = make_fi_computer(spec)(train, test, kSeed);
  attach_paired_tests(r, Alternative::greater);
  for (const auto& f : r.features) {
    REQUIRE(f.p_value.has_value());
    CHECK(*f.p_value < 1e-6);  // both features matter strongly
  }
}

TEST_CASE("null-importance p-values: strong signal hits the floor") {
  // Needs enough rows that the collinear x1/x2 pair cannot inflate the
  // null refits: Var(beta_hat) ~ 1 / (n (1 - corr^2)) must stay small.
  const DgpSpec c = builtin_dgp("dgp_c");
  const Dataset d = c.sample(4000, kSeed);
  MethodSpec spec;
  spec.method = "pfi";
  spec.learner = "ols";
  PimpOptions opt;
  opt.m_nulls = 20;
  const PimpResult r = pimp(d, make_fi_computer(spec), kSeed, opt);

  // y is a deterministic function of x1; no permuted-target refit comes close.
  REQUIRE(r.observed.features[0].p_value.has_value());
  CHECK_THAT(*r.observed.features[0].p_value,
             Catch::Matchers::WithinAbs(1.0 / 21.0, 1e-12));
  CHECK(r.nulls.count == 20);
  REQUIRE(r.nulls.features.size() == 2);
  CHECK(r.nulls.features[0] == "x1");
  CHECK(r.nulls.importances[0].size() == 20);
  // The observed importance dwarfs every null importance.
  const double obs = r.observed.features[0].importance;
  for (double v : r.nulls.importances[0]) CHECK(v < obs);

  CHECK_THROWS_AS(pimp(d, make_fi_computer(spec), kSeed, PimpOptions{10, 0.7}),
                  ConfigError);
}

TEST_CASE("null-importance p-values: a pure noise feature stays quiet") {
  // dgp_c extended with an independent noise column x3.
  const DgpSpec c = builtin_dgp("dgp_c");
  Dataset d = c.sample(500, kSeed);
  Rng rng(kSeed + 9);
  Matrix x(d.n(), 3);
  for (std::size_t i = 0; i < d.n(); ++i) {
    x(i, 0) = d.x(i, 0);
    x(i, 1) = d.x(i, 1);
    x(i, 2) = rng.normal();
  }
  Dataset ext;
  ext.feature_names = {"x1", "x2", "x3"};
  ext.x = std::move(x);
  ext.y = d.y;
  ext.task = d.task;

  MethodSpec spec;
  spec.method = "pfi";
  spec.learner = "ols";
  PimpOptions opt;
  opt.m_nulls = 30;
  const PimpResult r = pimp(ext, make_fi_computer(spec), kSeed, opt);
  REQUIRE(r.observed.features[2].p_value.has_value());
  CHECK(*r.observed.features[2].p_value > 0.05);
  CHECK(*r.observed.features[0].p_value <= 1.0 / 31.0 + 1e-12);

  // Determinism: the whole procedure is a pure function of the seed.
  const PimpResult again = pimp(ext, make_fi_computer(spec), kSeed, opt);
  CHECK(*again.observed.features[2].p_value ==
        *r.observed.features[2].p_value);
  CHECK(again.nulls.importances[2] == r.nulls.importances[2]);
}

TEST_CASE("method dispatch covers all three estimator families") {
  const DgpSpec g = builtin_dgp("dgp_g");
  const Dataset train = g.sample(3000, kSeed);
  const Dataset test = g.sample(2000, kSeed + 1);

  for (const std::string& name :
       {"pfi", "cfi", "msagevf", "csagevf", "csage", "loco", "loci"}) {
    MethodSpec spec;
    spec.method = name;
    spec.learner = "ols";
    const FiResult r = make_fi_computer(spec)(train, test, kSeed);
    INFO("method " << name);
    REQUIRE(r.features.size() == 2);
    CHECK(r.method == name);
    CHECK(r.learner == "ols");
    // On independent features every family agrees on the strong feature
    // being strong; exact magnitudes differ by design.
    CHECK(r.features[1].importance > 1.0);
  }
}

TEST_CASE("method dispatch honours conditioning sets") {
  const DgpSpec g = builtin_dgp("dgp_g");
  const Dataset train = g.sample(3000, kSeed);
  const Dataset test = g.sample(2000, kSeed + 1);

  MethodSpec rfi_spec;
  rfi_spec.method = "rfi";
  rfi_spec.conditioning = {0};
  const FiResult rfi_res = make_fi_computer(rfi_spec)(train, test, kSeed);
  REQUIRE(rfi_res.features.size() == 1);
  CHECK(rfi_res.features[0].feature == "x2");
  CHECK(rfi_res.conditioning == std::vector<std::string>{"x1"});

  MethodSpec wvim_spec;
  wvim_spec.method = "wvim";
  wvim_spec.conditioning = {0, 1};
  const FiResult wvim_res = make_fi_computer(wvim_spec)(train, test, kSeed);
  REQUIRE(wvim_res.features.size() == 1);
  CHECK(wvim_res.features[0].feature == "x1+x2");
  // Removing everything costs the entire explained variance ~ 5.
  CHECK_THAT(wvim_res.features[0].importance,
             Catch::Matchers::WithinAbs(5.0, 0.8));

  MethodSpec sc_spec;
  sc_spec.method = "scsagevf";
  sc_spec.conditioning = {0};
  const FiResult sc = make_fi_computer(sc_spec)(train, test, kSeed);
  REQUIRE(sc.features.size() == 1);
  CHECK(sc.features[0].feature == "x2");
  CHECK_THAT(sc.features[0].importance, Catch::Matchers::WithinAbs(4.0, 0.6));

  MethodSpec bad;
  bad.method = "shap";
  CHECK_THROWS_AS(make_fi_computer(bad), ConfigError);
}

TEST_CASE("one-shot convenience split runs a method end to end") {
  const DgpSpec g = builtin_dgp("dgp_g");
  const Dataset d = g.sample(4000, kSeed);
  MethodSpec spec;
  spec.method = "loco";
  spec.learner = "ols";
  const FiResult a = run_fi_method(spec, d, kSeed);
  const FiResult b = run_fi_method(spec, d, kSeed);
  REQUIRE(a.features.size() == 2);
  CHECK_THAT(a.features[1].importance, Catch::Matchers::WithinAbs(4.0, 0.7));
  CHECK(a.features[0].importance == b.features[0].importance);
}
