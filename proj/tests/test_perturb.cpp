// Perturbation-family importance: marginal permutation (pfi), full
// conditional (cfi), and the general conditioning-set engine (relative_fi).
// Expected values are population quantities for the built-in generators,
// frozen from independent Monte-Carlo calculations.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "lofi/dgp.hpp"
#include "lofi/learners.hpp"
#include "lofi/perturb.hpp"

using namespace lofi;

namespace {

constexpr std::uint64_t kSeed = 31;

std::vector<std::size_t> all_features(std::size_t p) {
  std::vector<std::size_t> s(p);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

PredictionModel full_oracle(const DgpSpec& d) {
  return d.oracle(all_features(d.p));
}

}  // namespace

TEST_CASE("pfi recovers 2 beta^2 for an independent linear generator") {
  const DgpSpec g = builtin_dgp("dgp_g");
  const Dataset eval = g.sample(20000, kSeed);
  const FiResult r = pfi(full_oracle(g), eval, LossFunction::l2(), kSeed);

  REQUIRE(r.features.size() == 2);
  CHECK(r.method == "pfi");
  CHECK(r.loss == std::string("l2"));
  CHECK(r.conditioning.empty());
  CHECK(r.features[0].feature == "x1");
  CHECK(r.features[1].feature == "x2");
  // Replacing x_j by an independent copy doubles its variance contribution:
  // E[(beta_j (Xj' - Xj))^2] = 2 beta_j^2.
  CHECK_THAT(r.features[0].importance, Catch::Matchers::WithinAbs(2.0, 0.25));
  CHECK_THAT(r.features[1].importance, Catch::Matchers::WithinAbs(8.0, 0.70));
  for (const auto& f : r.features) {
    CHECK(f.std_error > 0.0);
    CHECK(f.importance > 3.0 * f.std_error);
    CHECK(f.per_instance.size() == eval.n());
    CHECK(f.per_rep.size() == 5);  // default replacement reps
  }
  bool saw_sampler = false;
  for (const auto& n : r.notes)
    if (n == "sampler=permutation") saw_sampler = true;
  CHECK(saw_sampler);
}

TEST_CASE("cfi agrees with pfi when the features are independent") {
  const DgpSpec g = builtin_dgp("dgp_g");
  const Dataset train = g.sample(8000, kSeed);
  const Dataset eval = g.sample(20000, kSeed + 1);
  PerturbOptions opt;
  opt.reference = &train;
  const FiResult r = cfi(full_oracle(g), eval, LossFunction::l2(), kSeed, opt);

  REQUIRE(r.features.size() == 2);
  CHECK(r.method == "cfi");
  CHECK_THAT(r.features[0].importance, Catch::Matchers::WithinAbs(2.0, 0.25));
  CHECK_THAT(r.features[1].importance, Catch::Matchers::WithinAbs(8.0, 0.70));
  bool saw_sampler = false;
  for (const auto& n : r.notes)
    if (n == "sampler=gaussian") saw_sampler = true;
  CHECK(saw_sampler);
}

TEST_CASE("near-duplicate features: pfi fires on both, cfi on neither") {
  // x2 is an almost exact copy of x1 and y = x1. The fitted full model
  // spreads weight across the pair; permuting either column marginally
  // destroys the prediction, while conditional replacement barely moves it.
  const DgpSpec c = builtin_dgp("dgp_c");
  const Dataset train = c.sample(8000, kSeed);
  const Dataset eval = c.sample(10000, kSeed + 1);
  const PredictionModel f = full_oracle(c);

  const FiResult marginal = pfi(f, eval, LossFunction::l2(), kSeed);
  PerturbOptions opt;
  opt.reference = &train;
  const FiResult conditional = cfi(f, eval, LossFunction::l2(), kSeed, opt);

  // f = x1: permuting x1 costs 2 Var(X1); permuting the unused x2 costs 0.
  CHECK_THAT(marginal.features[0].importance,
             Catch::Matchers::WithinAbs(2.0, 0.25));
  CHECK_THAT(marginal.features[1].importance,
             Catch::Matchers::WithinAbs(0.0, 1e-12));
  // Conditionally, x1 | x2 has residual variance 1 - 1/1.01 ~ 0.0099, so
  // replacing it moves the loss by only ~2 * 0.0099.
  CHECK(conditional.features[0].importance < 0.05);
  CHECK(conditional.features[0].importance > 0.005);
  CHECK(std::abs(conditional.features[1].importance) < 0.01);
}

TEST_CASE("exactly duplicated features give zero conditional importance") {
  const DgpSpec a = builtin_dgp("dgp_a");
  const Dataset train = a.sample(6000, kSeed);
  const Dataset eval = a.sample(10000, kSeed + 1);
  // Handcrafted antisymmetric model: predicts 0 on the manifold x2 = x1.
  PredictionModel f = make_row_model(
      "difference", {"x1", "x2"}, Task::regression,
      [](const double* row) { return row[0] - row[1]; });

  const FiResult marginal = pfi(f, eval, LossFunction::l2(), kSeed);
  CHECK_THAT(marginal.features[0].importance,
             Catch::Matchers::WithinAbs(2.0, 0.25));
  CHECK_THAT(marginal.features[1].importance,
             Catch::Matchers::WithinAbs(2.0, 0.25));

  PerturbOptions opt;
  opt.reference = &train;
  const FiResult conditional = cfi(f, eval, LossFunction::l2(), kSeed, opt);
  // X1 | X2 is degenerate (x2 := x1), so the conditional draw reproduces the
  // original column up to regularisation noise and nothing changes.
  CHECK(std::abs(conditional.features[0].importance) < 1e-3);
  CHECK(std::abs(conditional.features[1].importance) < 1e-3);
}

TEST_CASE("cfi separates the noisy copy from the interaction partner") {
  const DgpSpec d = builtin_dgp("dgp_d");
  const Dataset eval = d.sample(20000, kSeed + 2);
  PerturbOptions opt;
  opt.sampler = "oracle";
  opt.analytic = d.feature_gaussian;
  const FiResult r =
      cfi(full_oracle(d), eval, LossFunction::l2(), kSeed, opt);

  REQUIRE(r.features.size() == 5);
  // x4 = x3 + noise(sd 0.1): conditionally almost pinned down, so its
  // replacement perturbs the loss by 2 * 0.01 * E[(1+X5)^2] = 0.04.
  CHECK_THAT(r.features[3].importance, Catch::Matchers::WithinAbs(0.040, 0.012));
  // x5 is independent of the rest: 2 * E[(1+X4)^2] * Var(X5) = 4.02.
  CHECK_THAT(r.features[4].importance, Catch::Matchers::WithinAbs(4.02, 0.35));
  CHECK(r.features[3].importance / r.features[4].importance < 0.05);
  // Both are genuinely nonzero at the three-sigma level.
  CHECK(r.features[3].importance > 3.0 * r.features[3].std_error);
  CHECK(r.features[4].importance > 3.0 * r.features[4].std_error);
  // x1, x2 are ignored by the response surface.
  CHECK(std::abs(r.features[0].importance) < 0.01);
  CHECK(std::abs(r.features[1].importance) < 0.01);
}

TEST_CASE("feature ignored by the model scores exactly zero") {
  const DgpSpec e = builtin_dgp("dgp_e");
  const Dataset eval = e.sample(10000, kSeed);
  const PredictionModel f = full_oracle(e);  // predicts x2, ignores x1

  const FiResult r = pfi(f, eval, LossFunction::l2(), kSeed);
  CHECK(r.features[0].importance == 0.0);
  CHECK(r.features[0].std_error == 0.0);
  // x2 carries all the signal: 2 Var(X2) = 2.
  CHECK_THAT(r.features[1].importance, Catch::Matchers::WithinAbs(2.0, 0.3));
}

TEST_CASE("cross-entropy pfi on the parity generator") {
  const DgpSpec b = builtin_dgp("dgp_b");
  const Dataset eval = b.sample(10000, kSeed);
  const PredictionModel f = full_oracle(b);  // hard 0/1 parity probabilities

  const FiResult r = pfi(f, eval, LossFunction::ce(), kSeed);
  CHECK(r.loss == std::string("ce"));
  // Permuting one parent flips the parity on half the rows; each flip costs
  // -ln(eps_clip) = 27.631, so the expected rise is ~13.82.
  CHECK_THAT(r.features[0].importance, Catch::Matchers::WithinAbs(13.82, 1.0));
  CHECK_THAT(r.features[1].importance, Catch::Matchers::WithinAbs(13.82, 1.0));
}

TEST_CASE("conditioning set controls what counts as redundant") {
  const DgpSpec d = builtin_dgp("dgp_d");
  const Dataset train = d.sample(8000, kSeed);
  const Dataset eval = d.sample(20000, kSeed + 1);
  const PredictionModel f = full_oracle(d);
  PerturbOptions opt;
  opt.reference = &train;

  // Unconditional replacement of x4 ignores its near-copy x3:
  // 2 Var(X4) E[(1+X5)^2] = 2 * 1.01 * 2 = 4.04.
  const FiResult marginal = relative_fi(f, eval, LossFunction::l2(), {}, kSeed, opt);
  const FiEstimate* m4 = marginal.find("x4");
  REQUIRE(m4 != nullptr);
  CHECK_THAT(m4->importance, Catch::Matchers::WithinAbs(4.04, 0.40));

  // Conditioning on x3 pins x4 down to its noise band: 2 * 0.01 * 2 = 0.04.
  const FiResult given3 = relative_fi(f, eval, LossFunction::l2(), {2}, kSeed, opt);
  REQUIRE(given3.features.size() == 4);  // x3 itself is excluded
  REQUIRE(given3.conditioning == std::vector<std::string>{"x3"});
  const FiEstimate* r4 = given3.find("x4");
  REQUIRE(r4 != nullptr);
  CHECK_THAT(r4->importance, Catch::Matchers::WithinAbs(0.04, 0.015));
  CHECK(r4->importance > 3.0 * r4->std_error);

  bool marginal_note = false, conditional_note = false;
  for (const auto& n : marginal.notes)
    if (n == "sampler=permutation") marginal_note = true;
  for (const auto& n : given3.notes)
    if (n == "sampler=gaussian") conditional_note = true;
  CHECK(marginal_note);   // empty conditioning set routes to permutation
  CHECK(conditional_note);  // non-empty set routes to the gaussian sampler
}

TEST_CASE("knn sampler can drive the conditional engine") {
  const DgpSpec c = builtin_dgp("dgp_c");
  const Dataset train = c.sample(8000, kSeed);
  const Dataset eval = c.sample(5000, kSeed + 1);
  PerturbOptions opt;
  opt.sampler = "knn";
  opt.sampler_opts.knn_k = 30;
  opt.reference = &train;
  const FiResult r = cfi(full_oracle(c), eval, LossFunction::l2(), kSeed, opt);
  // Nearest-neighbour replacement respects the x1 ~ x2 coupling, so the
  // model's only input stays close to its original value.
  CHECK(r.features[0].importance < 0.15);
  CHECK(std::abs(r.features[1].importance) < 0.05);
}

TEST_CASE("per-rep averages are consistent with the reported importance") {
  const DgpSpec g = builtin_dgp("dgp_g");
  const Dataset eval = g.sample(4000, kSeed);
  PerturbOptions opt;
  opt.n_reps = 7;
  const FiResult r = pfi(full_oracle(g), eval, LossFunction::l2(), kSeed, opt);
  for (const auto& f : r.features) {
    REQUIRE(f.per_rep.size() == 7);
    const double rep_mean =
        std::accumulate(f.per_rep.begin(), f.per_rep.end(), 0.0) / 7.0;
    CHECK_THAT(rep_mean, Catch::Matchers::WithinAbs(f.importance, 1e-9));
    const double pi_mean =
        std::accumulate(f.per_instance.begin(), f.per_instance.end(), 0.0) /
        static_cast<double>(f.per_instance.size());
    CHECK_THAT(pi_mean, Catch::Matchers::WithinAbs(f.importance, 1e-9));
  }
  bool saw = false;
  for (const auto& n : r.notes)
    if (n == "n_reps=7") saw = true;
  CHECK(saw);
}

TEST_CASE("perturbation runs are reproducible and seed-sensitive") {
  const DgpSpec g = builtin_dgp("dgp_g");
  const Dataset eval = g.sample(3000, kSeed);
  const PredictionModel f = full_oracle(g);

  const FiResult a = pfi(f, eval, LossFunction::l2(), 99);
  const FiResult b = pfi(f, eval, LossFunction::l2(), 99);
  const FiResult c = pfi(f, eval, LossFunction::l2(), 100);
  for (std::size_t j = 0; j < a.features.size(); ++j) {
    CHECK(a.features[j].importance == b.features[j].importance);
    CHECK(a.features[j].per_instance == b.features[j].per_instance);
  }
  CHECK(a.features[0].importance != c.features[0].importance);
}

TEST_CASE("perturbation options are validated") {
  const DgpSpec g = builtin_dgp("dgp_g");
  const Dataset eval = g.sample(100, kSeed);
  const PredictionModel f = full_oracle(g);

  PerturbOptions zero_reps;
  zero_reps.n_reps = 0;
  CHECK_THROWS_AS(pfi(f, eval, LossFunction::l2(), kSeed, zero_reps),
                  ConfigError);
  CHECK_THROWS_AS(
      relative_fi(f, eval, LossFunction::l2(), {5}, kSeed), ConfigError);
  // Permutation sampling cannot honour a conditioning set.
  PerturbOptions perm;
  perm.sampler = "permutation";
  CHECK_THROWS_AS(relative_fi(f, eval, LossFunction::l2(), {0}, kSeed, perm),
                  ConfigError);
  // The oracle sampler needs analytic moments.
  PerturbOptions oracle;
  oracle.sampler = "oracle";
  CHECK_THROWS_AS(relative_fi(f, eval, LossFunction::l2(), {0}, kSeed, oracle),
                  ConfigError);
}
