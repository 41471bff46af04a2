#pragma once
//
// Result serialization: estimator results and verification reports as JSON
// (stable field order, newline-terminated UTF-8) and as tidy CSV tables for
// external plotting.
//
// Result schema (field order is part of the contract):
//   {schema_version, method, loss, learner, seed, config,
//    features: [{name, importance, std_error, ci_low, ci_high, p_value}],
//    runtime_ms}
//
// relative_importance follows the signed-bar convention: every estimate is
// divided by the largest positive estimate, so weaker features land in
// (0, 1) and harmful ones go negative. When nothing is positive the ratio
// is reported as 0.
//
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lofi/dgp.hpp"
#include "lofi/errors.hpp"
#include "lofi/fi_result.hpp"
#include "lofi/verify.hpp"

namespace lofi {

using ordered_json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

namespace report_detail {

inline ordered_json opt_to_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

/// CSV cell for a double; empty string for "not computed".
inline std::string cell(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string cell(const std::optional<double>& v) {
  return v ? cell(*v) : std::string();
}

inline double max_positive_importance(const std::vector<double>& estimates) {
  double best = 0.0;
  for (double e : estimates) best = std::max(best, e);
  return best;
}

}  // namespace report_detail

/// Signed ratios against the largest positive estimate (0s when none is).
inline std::vector<double> relative_importance(
    const std::vector<double>& estimates) {
  const double best = report_detail::max_positive_importance(estimates);
  std::vector<double> rel(estimates.size(), 0.0);
  if (best > 0.0)
    for (std::size_t i = 0; i < estimates.size(); ++i)
      rel[i] = estimates[i] / best;
  return rel;
}

inline ordered_json fi_result_to_json(const FiResult& r, std::uint64_t seed,
                                      ordered_json config,
                                      double runtime_ms) {
  ordered_json out;
  out["schema_version"] = kSchemaVersion;
  out["method"] = r.method;
  out["loss"] = r.loss;
  out["learner"] = r.learner;
  out["seed"] = seed;
  out["config"] = std::move(config);
  ordered_json features = ordered_json::array();
  for (const auto& f : r.features) {
    ordered_json e;
    e["name"] = f.feature;
    e["importance"] = f.importance;
    e["std_error"] = f.std_error;
    e["ci_low"] = report_detail::opt_to_json(f.ci_low);
    e["ci_high"] = report_detail::opt_to_json(f.ci_high);
    e["p_value"] = report_detail::opt_to_json(f.p_value);
    features.push_back(std::move(e));
  }
  out["features"] = std::move(features);
  out["runtime_ms"] = runtime_ms;
  return out;
}

inline ordered_json verification_to_json(const VerificationReport& r,
                                         ordered_json config = {}) {
  ordered_json out;
  out["schema_version"] = kSchemaVersion;
  out["suite"] = r.suite;
  out["seed"] = r.seed;
  out["config"] = std::move(config);
  ordered_json summary;
  summary["n_pass"] = r.n_outcome("pass");
  summary["n_fail"] = r.n_outcome("fail");
  summary["n_vacuous"] = r.n_outcome("vacuous");
  summary["rules_covered"] = r.rules_covered();
  summary["checks_pass"] = r.checks_pass();
  summary["counterexamples_confirmed"] = r.counterexamples_confirmed();
  summary["assertions_passed"] = r.assertions_passed();
  summary["all_passed"] = r.all_passed();
  out["summary"] = std::move(summary);
  out["notes"] = r.notes;

  ordered_json checks = ordered_json::array();
  for (const auto& c : r.checks) {
    ordered_json j;
    j["rule_id"] = c.rule_id;
    j["rule"] = c.rule;
    j["method"] = c.method;
    j["dgp"] = c.dgp;
    j["model"] = c.model_kind;
    j["feature"] = c.feature;
    j["conditioning"] = c.conditioning;
    j["assumptions"] = c.assumptions;
    j["assumptions_met"] = c.assumptions_met;
    j["triggered"] = c.triggered;
    j["estimate"] = c.estimate;
    j["std_error"] = c.std_error;
    j["ci_width"] = c.ci_width;
    j["zero_floor"] = c.zero_floor;
    j["claim_truth"] = c.claim_truth;
    j["outcome"] = c.outcome;
    j["reason"] = c.reason;
    checks.push_back(std::move(j));
  }
  out["checks"] = std::move(checks);

  ordered_json ces = ordered_json::array();
  for (const auto& c : r.counterexamples) {
    ordered_json j;
    j["name"] = c.name;
    j["dgp"] = c.dgp;
    j["estimate"] = c.estimate;
    j["std_error"] = c.std_error;
    j["confirmed"] = c.confirmed;
    j["detail"] = c.detail;
    ces.push_back(std::move(j));
  }
  out["counterexamples"] = std::move(ces);

  ordered_json table = ordered_json::array();
  for (const auto& e : r.figure2) {
    ordered_json j;
    j["learner"] = e.learner;
    j["method"] = e.method;
    j["feature"] = e.feature;
    j["mean_importance"] = e.mean_importance;
    j["sd_importance"] = e.sd_importance;
    j["relative_importance"] = e.relative;
    j["repetitions"] = e.repetitions;
    table.push_back(std::move(j));
  }
  out["figure2"] = std::move(table);

  ordered_json asserts = ordered_json::array();
  for (const auto& a : r.assertions) {
    ordered_json j;
    j["description"] = a.description;
    j["passed"] = a.passed;
    asserts.push_back(std::move(j));
  }
  out["assertions"] = std::move(asserts);
  out["runtime_ms"] = r.runtime_ms;
  return out;
}

/// Ground-truth sidecar for a simulated dataset: generator facts plus the
/// exact association table.
inline ordered_json ground_truth_to_json(const DgpSpec& d,
                                         ordered_json config = {}) {
  ordered_json out;
  out["schema_version"] = kSchemaVersion;
  out["dgp"] = d.name;
  out["config"] = std::move(config);
  out["task"] = d.task == Task::binary_classification
                    ? "binary_classification"
                    : "regression";
  out["canonical_loss"] = d.canonical_loss == LossKind::ce ? "ce" : "l2";
  out["feature_names"] = d.feature_names;
  out["target_name"] = "y";
  out["bayes_risk"] = d.bayes_risk;
  out["optimal_constant_prediction"] = d.target_mean;
  ordered_json flags = ordered_json::array();
  for (const auto& f : ground_truth_flags(d)) {
    ordered_json j;
    j["feature"] = f.feature;
    j["associated_marginally"] = f.marginal;
    j["associated_given_rest"] = f.given_rest;
    ordered_json per_set = ordered_json::array();
    for (const auto& [g, dep] : f.given) {
      ordered_json s;
      ordered_json names = ordered_json::array();
      for (std::size_t k : g) names.push_back(d.feature_names[k]);
      s["conditioning"] = std::move(names);
      s["associated"] = dep;
      per_set.push_back(std::move(s));
    }
    j["given"] = std::move(per_set);
    flags.push_back(std::move(j));
  }
  out["association_flags"] = std::move(flags);
  return out;
}

inline void write_json_file(const std::string& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  require_data(out.good(), "cannot open output file '" + path + "'");
  out << j.dump(2) << '\n';
  require_data(out.good(), "failed writing '" + path + "'");
}

inline ordered_json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require_data(in.good(), "cannot open input file '" + path + "'");
  try {
    return ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
}

/// Tidy estimate table straight from a result (one row per feature).
inline std::string fi_result_to_csv(const FiResult& r) {
  std::vector<double> estimates;
  for (const auto& f : r.features) estimates.push_back(f.importance);
  const auto rel = relative_importance(estimates);
  std::ostringstream out;
  out << "feature,method,estimate,ci_low,ci_high,relative_importance\n";
  for (std::size_t i = 0; i < r.features.size(); ++i) {
    const auto& f = r.features[i];
    out << f.feature << ',' << r.method << ','
        << report_detail::cell(f.importance) << ','
        << report_detail::cell(f.ci_low) << ','
        << report_detail::cell(f.ci_high) << ','
        << report_detail::cell(rel[i]) << '\n';
  }
  return out.str();
}

/// Converts a stored result or verification-report JSON into the tidy CSV
/// shape. Results list their features; verification reports yield their
/// benchmark table when present, otherwise the executed checks.
inline std::string stored_json_to_csv(const ordered_json& j) {
  std::ostringstream out;
  out << "feature,method,estimate,ci_low,ci_high,relative_importance\n";
  if (j.contains("features")) {
    const auto& features = j.at("features");
    std::vector<double> estimates;
    for (const auto& f : features)
      estimates.push_back(f.at("importance").get<double>());
    const auto rel = relative_importance(estimates);
    const std::string method = j.value("method", std::string());
    for (std::size_t i = 0; i < features.size(); ++i) {
      const auto& f = features[i];
      const auto opt_cell = [&](const char* key) {
        return f.contains(key) && !f.at(key).is_null()
                   ? report_detail::cell(f.at(key).get<double>())
                   : std::string();
      };
      out << f.at("name").get<std::string>() << ',' << method << ','
          << report_detail::cell(f.at("importance").get<double>()) << ','
          << opt_cell("ci_low") << ',' << opt_cell("ci_high") << ','
          << report_detail::cell(rel[i]) << '\n';
    }
    return out.str();
  }
  if (j.contains("figure2") && !j.at("figure2").empty()) {
    for (const auto& e : j.at("figure2"))
      out << e.at("feature").get<std::string>() << ','
          << e.at("learner").get<std::string>() << '/'
          << e.at("method").get<std::string>() << ','
          << report_detail::cell(e.at("mean_importance").get<double>())
          << ",,,"
          << report_detail::cell(e.at("relative_importance").get<double>())
          << '\n';
    return out.str();
  }
  if (j.contains("checks")) {
    for (const auto& c : j.at("checks")) {
      const double est = c.at("estimate").get<double>();
      const double width = c.at("ci_width").get<double>();
      out << c.at("feature").get<std::string>() << ','
          << c.at("method").get<std::string>() << ','
          << report_detail::cell(est) << ','
          << report_detail::cell(est - width / 2.0) << ','
          << report_detail::cell(est + width / 2.0) << ",\n";
    }
    if (j.contains("counterexamples"))
      for (const auto& c : j.at("counterexamples"))
        out << c.at("name").get<std::string>() << ",counterexample,"
            << report_detail::cell(c.at("estimate").get<double>())
            << ",,,\n";
    return out.str();
  }
  throw DataError(
      "JSON is neither an estimator result (no 'features' array) nor a "
      "verification report (no 'figure2'/'checks')");
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require_data(out.good(), "cannot open output file '" + path + "'");
  out << text;
  require_data(out.good(), "failed writing '" + path + "'");
}

}  // namespace lofi
