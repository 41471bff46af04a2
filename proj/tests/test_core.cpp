// Core layer: dataset validation, CSV ingestion, splits, loss/risk, seeding.
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "lofi/csv.hpp"
#include "lofi/dataset.hpp"
#include "lofi/loss.hpp"
#include "lofi/model.hpp"
#include "lofi/parallel.hpp"
#include "lofi/resampling.hpp"
#include "lofi/rng.hpp"
#include "lofi/stats.hpp"

using namespace lofi;

namespace {

Dataset make_toy(std::size_t n = 8) {
  Matrix x(n, 2);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = static_cast<double>(i);
    x(i, 1) = static_cast<double>(i) * 0.5;
    y[i] = static_cast<double>(i % 2);
  }
  return Dataset({"a", "b"}, std::move(x), std::move(y), Task::regression);
}

// linear benchmark sample: y = x1 + 2*x2 + eps, eps ~ N(0,1), x iid N(0,1)
Dataset sample_linear(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, 2);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    y[i] = x(i, 0) + 2.0 * x(i, 1) + rng.normal();
  }
  return Dataset({"x1", "x2"}, std::move(x), std::move(y), Task::regression);
}

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = std::string("/tmp/") + name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

}  // namespace

// ===== dataset =====

TEST_CASE("dataset validates its invariants", "[core]") {
  CHECK_NOTHROW(make_toy());

  Matrix x(3, 2);
  std::vector<double> y3(3, 0.0);
  CHECK_THROWS_AS(Dataset({"a", "a"}, x, y3, Task::regression), DataError);
  CHECK_THROWS_AS(Dataset({"a"}, x, y3, Task::regression), DataError);
  CHECK_THROWS_AS(Dataset({"a", "b"}, x, {1.0, 2.0}, Task::regression), DataError);

  std::vector<double> ybad = {0.0, 0.5, 1.0};
  CHECK_THROWS_AS(Dataset({"a", "b"}, x, ybad, Task::binary_classification), DataError);
  CHECK_NOTHROW(Dataset({"a", "b"}, x, {0.0, 1.0, 0.0}, Task::binary_classification));
}

TEST_CASE("dataset copy helpers preserve structure", "[core]") {
  auto d = make_toy();
  auto replaced = d.with_replaced_column(1, std::vector<double>(d.n(), 7.0));
  CHECK(replaced.x(3, 1) == 7.0);
  CHECK(replaced.x(3, 0) == d.x(3, 0));
  CHECK(d.x(3, 1) != 7.0);  // original untouched

  std::vector<std::size_t> rows = {2, 0};
  auto sub = d.subset_rows(rows);
  REQUIRE(sub.n() == 2);
  CHECK(sub.x(0, 0) == 2.0);
  CHECK(sub.y[1] == d.y[0]);

  auto sel = d.select_features({1});
  REQUIRE(sel.p() == 1);
  CHECK(sel.feature_names[0] == "b");
  CHECK(sel.x(4, 0) == d.x(4, 1));
  CHECK(sel.y == d.y);
}

// ===== csv =====

TEST_CASE("csv round-trips quoted and plain fields", "[core][csv]") {
  const auto path = write_temp("lofi_csv_basic.csv",
                               "\"f,1\",f2,y\r\n"
                               "1.5,-2,0\r\n"
                               "2.25,\"3\",1\r\n");
  auto d = read_csv(path, "y");
  REQUIRE(d.n() == 2);
  REQUIRE(d.p() == 2);
  CHECK(d.feature_names[0] == "f,1");
  CHECK(d.x(0, 0) == 1.5);
  CHECK(d.x(1, 1) == 3.0);
  CHECK(d.task == Task::binary_classification);  // all-0/1 target

  // round trip through the writer
  const std::string out_path = "/tmp/lofi_csv_roundtrip.csv";
  write_csv(out_path, d, "y");
  auto d2 = read_csv(out_path, "y");
  REQUIRE(d2.n() == d.n());
  CHECK(d2.feature_names == d.feature_names);
  for (std::size_t i = 0; i < d.n(); ++i)
    for (std::size_t j = 0; j < d.p(); ++j) CHECK(d2.x(i, j) == d.x(i, j));
}

TEST_CASE("csv rejects malformed input with row/column diagnostics", "[core][csv]") {
  const auto bad_cell = write_temp("lofi_csv_bad.csv", "a,b,y\n1,oops,0\n");
  try {
    read_csv(bad_cell, "y");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("'b'") != std::string::npos);
    CHECK(msg.find("oops") != std::string::npos);
  }

  const auto missing = write_temp("lofi_csv_missing.csv", "a,b\n1,2\n");
  CHECK_THROWS_AS(read_csv(missing, "y"), DataError);

  const auto ragged = write_temp("lofi_csv_ragged.csv", "a,b,y\n1,2\n");
  CHECK_THROWS_AS(read_csv(ragged, "y"), DataError);

  const auto non_binary = write_temp("lofi_csv_reg.csv", "a,y\n1,2.5\n2,0\n");
  CHECK(read_csv(non_binary, "y").task == Task::regression);
}

// ===== split / kfold =====

TEST_CASE("split produces the documented sizes and is deterministic", "[core]") {
  auto s = split(10000, 0.7, 11);
  CHECK(s.train.size() == 7000);
  CHECK(s.test.size() == 3000);

  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 10000);  // disjoint cover

  auto s2 = split(10000, 0.7, 11);
  CHECK(s.train == s2.train);
  CHECK(s.test == s2.test);
  auto s3 = split(10000, 0.7, 12);
  CHECK(s.train != s3.train);

  CHECK_THROWS_AS(split(10, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split(1, 0.7, 1), ConfigError);
}

TEST_CASE("kfold balances remainders and partitions rows", "[core]") {
  auto folds = kfold(103, 5, 3);
  REQUIRE(folds.size() == 5);
  std::vector<std::size_t> sizes;
  for (const auto& f : folds) sizes.push_back(f.test.size());
  CHECK(sizes == std::vector<std::size_t>{21, 21, 21, 20, 20});

  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    seen.insert(f.test.begin(), f.test.end());
    CHECK(f.train.size() == 103 - f.test.size());
  }
  CHECK(seen.size() == 103);

  CHECK_THROWS_AS(kfold(10, 1, 1), ConfigError);
  CHECK_THROWS_AS(kfold(3, 5, 1), ConfigError);
}

// ===== loss / risk =====

TEST_CASE("cross-entropy clamps instead of diverging", "[core][loss]") {
  auto ce = LossFunction::ce();
  CHECK_THAT(ce(1.0, 0.0), Catch::Matchers::WithinAbs(-std::log(1e-12), 1e-9));
  CHECK_THAT(ce(0.0, 1.0), Catch::Matchers::WithinAbs(-std::log(1e-12), 1e-9));
  CHECK(ce(1.0, 1.0) < 2e-12);
  CHECK_THAT(ce(1.0, 0.5), Catch::Matchers::WithinAbs(std::log(2.0), 1e-12));
  CHECK_THROWS_AS(ce(0.25, 0.5), ComputeError);

  auto l2 = LossFunction::l2();
  CHECK(l2(3.0, 1.0) == 4.0);
}

TEST_CASE("estimate_risk matches the linear benchmark's constant-model risk", "[core][risk]") {
  // constant-0 model risk on y = x1 + 2 x2 + eps: Var(Y) = 1 + 4 + 1 = 6
  auto d = sample_linear(60000, 99);
  auto r = estimate_risk(constant_model(0.0, Task::regression), d, LossFunction::l2());
  CHECK_THAT(r.mean_loss, Catch::Matchers::WithinAbs(6.0, 0.2));
  CHECK(r.n == d.n());
  CHECK(r.std_error > 0.0);

  // mean_loss is exactly the mean of the retained per-instance losses
  REQUIRE(r.per_instance.size() == d.n());
  CHECK_THAT(r.mean_loss,
             Catch::Matchers::WithinRel(mean(r.per_instance), 1e-12));
}

TEST_CASE("estimate_risk is invariant under row permutation", "[core][risk]") {
  auto d = sample_linear(5000, 123);
  auto model = make_row_model("fixed", {"x1", "x2"}, Task::regression,
                              [](const double* x) { return x[0] + 2.0 * x[1]; });
  auto base = estimate_risk(model, d, LossFunction::l2());

  Rng rng(7);
  auto perm = rng.permutation(d.n());
  auto shuffled = d.subset_rows(perm);
  auto again = estimate_risk(model, shuffled, LossFunction::l2());
  CHECK_THAT(base.mean_loss, Catch::Matchers::WithinRel(again.mean_loss, 1e-12));
}

TEST_CASE("estimate_risk reports broken inputs precisely", "[core][risk]") {
  auto d = make_toy();

  // model wanting a column the data lacks
  auto wrong = make_row_model("fixed", {"zz"}, Task::regression,
                              [](const double*) { return 0.0; });
  CHECK_THROWS_AS(estimate_risk(wrong, d, LossFunction::l2()), DataError);

  // non-finite prediction names the offending row (1-based)
  auto nan_at_row_5 = make_row_model("fixed", {"a"}, Task::regression,
                                     [](const double* x) {
                                       return x[0] == 4.0
                                                  ? std::numeric_limits<double>::infinity()
                                                  : 0.0;
                                     });
  try {
    estimate_risk(nan_at_row_5, d, LossFunction::l2());
    FAIL("expected ComputeError");
  } catch (const ComputeError& e) {
    CHECK(std::string(e.what()).find("row 5") != std::string::npos);
  }
}

// ===== seeding / rng =====

TEST_CASE("derived seeds are pure functions of master seed and tags", "[core][rng]") {
  const auto s1 = derive_seed(42, {seed_domain::perturb, 3, 7});
  const auto s2 = derive_seed(42, {seed_domain::perturb, 3, 7});
  CHECK(s1 == s2);
  CHECK(s1 != derive_seed(42, {seed_domain::perturb, 7, 3}));   // position matters
  CHECK(s1 != derive_seed(43, {seed_domain::perturb, 3, 7}));   // master matters
  CHECK(s1 != derive_seed(42, {seed_domain::reduce, 3, 7}));    // domain matters

  Rng a(s1), b(s1);
  for (int i = 0; i < 100; ++i) REQUIRE(a.bits() == b.bits());
}

TEST_CASE("rng draw helpers behave", "[core][rng]") {
  Rng rng(5);
  RunningMoments m;
  for (int i = 0; i < 200000; ++i) m.add(rng.normal());
  CHECK_THAT(m.mean, Catch::Matchers::WithinAbs(0.0, 0.02));
  CHECK_THAT(m.variance(), Catch::Matchers::WithinAbs(1.0, 0.03));

  // permutation is a bijection and deterministic per seed
  Rng r1(9), r2(9);
  auto p1 = r1.permutation(1000);
  auto p2 = r2.permutation(1000);
  CHECK(p1 == p2);
  std::set<std::size_t> uniq(p1.begin(), p1.end());
  CHECK(uniq.size() == 1000);

  // bounded draws stay in range
  Rng r3(11);
  for (int i = 0; i < 1000; ++i) CHECK(r3.uniform_index(7) < 7);
}

TEST_CASE("parallel_for computes disjoint slots deterministically", "[core][parallel]") {
  std::vector<double> serial(500), threaded(500);
  set_max_threads(1);
  parallel_for(serial.size(), [&](std::size_t i) {
    Rng rng(derive_seed(77, {seed_domain::test, i}));
    serial[i] = rng.normal();
  });
  set_max_threads(4);
  parallel_for(threaded.size(), [&](std::size_t i) {
    Rng rng(derive_seed(77, {seed_domain::test, i}));
    threaded[i] = rng.normal();
  });
  set_max_threads(0);
  CHECK(serial == threaded);
}

// ===== stats =====

TEST_CASE("distribution helpers hit textbook values", "[core][stats]") {
  CHECK_THAT(normal_quantile(0.975), Catch::Matchers::WithinAbs(1.959964, 1e-5));
  CHECK_THAT(normal_quantile(0.5), Catch::Matchers::WithinAbs(0.0, 1e-9));
  CHECK_THAT(normal_cdf(1.959964), Catch::Matchers::WithinAbs(0.975, 1e-6));

  // t table: P(|T| > 2.086) = 0.05 at df = 20
  CHECK_THAT(t_two_sided_p(2.086, 20), Catch::Matchers::WithinAbs(0.05, 5e-4));
  // t with df=1 (Cauchy): P(T <= 1) = 0.75
  CHECK_THAT(student_t_cdf(1.0, 1.0), Catch::Matchers::WithinAbs(0.75, 1e-6));

  std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  CHECK_THAT(mean(v), Catch::Matchers::WithinAbs(2.5, 1e-15));
  CHECK_THAT(sample_variance(v), Catch::Matchers::WithinRel(5.0 / 3.0, 1e-12));
}
