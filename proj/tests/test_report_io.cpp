// JSON/CSV serialization: pinned result schema, signed relative importances,
// verification-report round trips, and the stored-JSON -> tidy-CSV converter.
#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "lofi/dgp.hpp"
#include "lofi/errors.hpp"
#include "lofi/report_io.hpp"
#include "lofi/verify.hpp"

namespace {

lofi::FiResult toy_result() {
  lofi::FiResult r;
  r.method = "pfi";
  r.loss = "l2";
  r.learner = "ols";
  lofi::FiEstimate a;
  a.feature = "x1";
  a.importance = 2.0;
  a.std_error = 0.1;
  a.ci_low = 1.8;
  a.ci_high = 2.2;
  a.p_value = 0.001;
  lofi::FiEstimate b;
  b.feature = "x2";
  b.importance = -0.5;
  b.std_error = 0.2;
  r.features = {a, b};
  return r;
}

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const char* name)
      : path(std::filesystem::temp_directory_path() / name) {}
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }
};

}  // namespace

TEST_CASE("result JSON carries exactly the pinned fields in order") {
  const auto j = lofi::fi_result_to_json(toy_result(), 42,
                                         lofi::ordered_json{{"note", "cfg"}},
                                         12.5);
  const std::vector<std::string> expected = {
      "schema_version", "method", "loss",       "learner",
      "seed",           "config", "features",   "runtime_ms"};
  std::vector<std::string> actual;
  for (auto it = j.begin(); it != j.end(); ++it) actual.push_back(it.key());
  REQUIRE(actual == expected);

  CHECK(j.at("schema_version").get<int>() == 1);
  CHECK(j.at("method").get<std::string>() == "pfi");
  CHECK(j.at("seed").get<std::uint64_t>() == 42);
  CHECK(j.at("runtime_ms").get<double>() == 12.5);

  const auto& f0 = j.at("features").at(0);
  const std::vector<std::string> feature_fields = {
      "name", "importance", "std_error", "ci_low", "ci_high", "p_value"};
  std::vector<std::string> got;
  for (auto it = f0.begin(); it != f0.end(); ++it) got.push_back(it.key());
  REQUIRE(got == feature_fields);
  CHECK(f0.at("importance").get<double>() == 2.0);

  // x2 never received an interval: optionals serialize as null, not absent
  const auto& f1 = j.at("features").at(1);
  CHECK(f1.at("ci_low").is_null());
  CHECK(f1.at("p_value").is_null());
}

TEST_CASE("relative importance is a signed ratio against the best positive") {
  using lofi::relative_importance;
  const auto rel = relative_importance({2.0, -0.5, 1.0});
  REQUIRE(rel.size() == 3);
  CHECK(rel[0] == Catch::Approx(1.0));
  CHECK(rel[1] == Catch::Approx(-0.25));
  CHECK(rel[2] == Catch::Approx(0.5));

  // no positive estimate at all: the convention degrades to all zeros
  const auto none = relative_importance({-1.0, -2.0, 0.0});
  for (double v : none) CHECK(v == 0.0);
}

TEST_CASE("flat CSV export ranks features with the shared header") {
  const std::string csv = lofi::fi_result_to_csv(toy_result());
  CHECK(csv.rfind("feature,method,estimate,ci_low,ci_high,"
                  "relative_importance\n",
                  0) == 0);
  CHECK(csv.find("x1,pfi,2,1.8,2.2,1\n") != std::string::npos);
  // missing intervals stay as empty cells; the negative scales to -0.25
  CHECK(csv.find("x2,pfi,-0.5,,,-0.25\n") != std::string::npos);
}

TEST_CASE("JSON files round-trip through write and read") {
  TempFile tmp("lofi_report_io_roundtrip.json");
  const auto j = lofi::fi_result_to_json(toy_result(), 7, {}, 1.0);
  lofi::write_json_file(tmp.path.string(), j);
  const auto back = lofi::read_json_file(tmp.path.string());
  CHECK(back == j);

  CHECK_THROWS_AS(lofi::read_json_file("/nonexistent/nothing.json"),
                  lofi::DataError);
}

TEST_CASE("malformed JSON input is a data error, not a crash") {
  TempFile tmp("lofi_report_io_bad.json");
  lofi::write_text_file(tmp.path.string(), "{not json");
  CHECK_THROWS_AS(lofi::read_json_file(tmp.path.string()), lofi::DataError);
}

TEST_CASE("stored result JSON converts to the tidy CSV layout") {
  const auto j = lofi::fi_result_to_json(toy_result(), 7, {}, 1.0);
  const std::string csv = lofi::stored_json_to_csv(j);
  CHECK(csv.find("x1,pfi,2,1.8,2.2,1\n") != std::string::npos);
  CHECK(csv.find("x2,pfi,-0.5,,,-0.25\n") != std::string::npos);

  lofi::ordered_json junk = {{"hello", 1}};
  CHECK_THROWS_AS(lofi::stored_json_to_csv(junk), lofi::DataError);
}

TEST_CASE("verification reports serialize their summary and convert to CSV") {
  lofi::VerificationReport r;
  r.suite = "counterexamples";
  r.seed = 99;
  r.runtime_ms = 3.0;
  lofi::CounterexampleCheck c;
  c.name = "some-failure-mode";
  c.dgp = "dgp_a";
  c.detail = "what went wrong";
  c.estimate = 1.5;
  c.std_error = 0.1;
  c.confirmed = true;
  r.counterexamples.push_back(c);

  const auto j = lofi::verification_to_json(r, {});
  CHECK(j.at("schema_version").get<int>() == 1);
  CHECK(j.at("suite").get<std::string>() == "counterexamples");
  CHECK(j.at("summary").at("counterexamples_confirmed").get<bool>());
  CHECK(j.at("summary").at("all_passed").get<bool>());
  CHECK(j.at("counterexamples").size() == 1);

  const std::string csv = lofi::stored_json_to_csv(j);
  CHECK(csv.find("some-failure-mode,counterexample,1.5,,,\n") !=
        std::string::npos);
}

TEST_CASE("ground-truth sidecars describe the generator and its "
          "dependencies") {
  const auto d = lofi::builtin_dgp("dgp_b");
  const auto j = lofi::ground_truth_to_json(d, {});
  CHECK(j.at("dgp").get<std::string>() == "dgp_b");
  CHECK(j.at("task").get<std::string>() == "binary_classification");
  CHECK(j.at("canonical_loss").get<std::string>() == "ce");
  CHECK(j.at("target_name").get<std::string>() == "y");
  REQUIRE(j.at("association_flags").size() == 2);

  // the xor-style target: no marginal association, but association given
  // the other feature
  const auto& x1 = j.at("association_flags").at(0);
  CHECK(x1.at("feature").get<std::string>() == "x1");
  CHECK_FALSE(x1.at("associated_marginally").get<bool>());
  CHECK(x1.at("associated_given_rest").get<bool>());
  bool saw_empty = false, saw_other = false;
  for (const auto& g : x1.at("given")) {
    const auto cond = g.at("conditioning");
    if (cond.empty()) {
      saw_empty = true;
      CHECK_FALSE(g.at("associated").get<bool>());
    } else {
      saw_other = true;
      CHECK(g.at("associated").get<bool>());
    }
  }
  CHECK(saw_empty);
  CHECK(saw_other);
}
