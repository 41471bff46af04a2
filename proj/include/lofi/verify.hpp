#pragma once
//
// Verification harness.
//
// Three suites check the estimators against built-in data generators whose
// dependence structure is known exactly:
//
//  * run_table1          — every interpretation rule of the form "estimate
//    non-zero (zero) under these assumptions implies this (in)dependence"
//    runs as pass/fail/vacuous checks over curated generator/feature
//    combinations. A check whose assumptions do not hold is vacuous, never
//    pass/fail; a check whose antecedent does not fire (an estimate that is
//    neither significantly non-zero nor certifiably zero in the direction
//    the rule needs) is vacuous with the reason recorded.
//
//  * run_counterexamples — five known failure modes are reproduced
//    numerically: estimates that are large (or zero) for reasons unrelated
//    to the dependence a naive reading would infer.
//
//  * run_figure2         — the five-feature benchmark: seven estimators on
//    two learners with repetitions, reduced to a relative-importance table
//    plus qualitative ordering assertions.
//
// Shared decision rule: an estimate is "non-zero" when |estimate| exceeds
// 3 standard errors; it is "zero" when it is within 3 standard errors of 0
// AND its 95% interval is narrower than 5% of the result's importance scale
// (the largest significant importance in the same result, falling back to
// the risk of the optimal constant prediction when nothing is significant).
//
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lofi/dataset.hpp"
#include "lofi/dgp.hpp"
#include "lofi/errors.hpp"
#include "lofi/fi_result.hpp"
#include "lofi/learners.hpp"
#include "lofi/loss.hpp"
#include "lofi/marginal.hpp"
#include "lofi/model.hpp"
#include "lofi/perturb.hpp"
#include "lofi/refit.hpp"
#include "lofi/resampling.hpp"
#include "lofi/rng.hpp"
#include "lofi/stats.hpp"

namespace lofi {

// ===== report types =====

/// One executed (or explicitly skipped) interpretation-rule check.
struct ImplicationCheck {
  int rule_id = 0;            // stable rule identifier, 1-based
  std::string rule;           // statement of the interpretation rule
  std::string method;         // estimator exercised
  std::string dgp;            // generator name
  std::string model_kind;     // "oracle" or the learner fitted/refitted
  std::string feature;        // feature of interest
  std::vector<std::string> conditioning;  // names of the conditioning set G
  std::string assumptions;    // required assumptions and their status
  bool assumptions_met = false;
  bool triggered = false;     // the rule's antecedent fired on the estimate
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_width = 0.0;      // 95% Wald width used by the zero decision
  double zero_floor = 0.0;    // importance scale the width is compared to
  bool claim_truth = false;   // ground truth of the rule's consequent
  std::string outcome;        // "pass" | "fail" | "vacuous"
  std::string reason;
};

/// One reproduced failure mode: a numeric signature plus the ground-truth
/// facts that make the naive reading wrong.
struct CounterexampleCheck {
  std::string name;
  std::string dgp;
  std::string detail;
  double estimate = 0.0;
  double std_error = 0.0;
  bool confirmed = false;
};

/// One cell of the benchmark relative-importance table.
struct Figure2Entry {
  std::string learner;
  std::string method;
  std::string feature;
  double mean_importance = 0.0;
  double sd_importance = 0.0;  // spread over repetitions
  double relative = 0.0;       // mean / largest positive mean in the group
  std::size_t repetitions = 0;
};

struct NamedAssertion {
  std::string description;
  bool passed = false;
};

struct VerificationReport {
  std::string suite;
  std::uint64_t seed = 0;
  double runtime_ms = 0.0;
  std::vector<std::string> notes;

  std::vector<ImplicationCheck> checks;
  std::vector<CounterexampleCheck> counterexamples;
  std::vector<Figure2Entry> figure2;
  std::vector<NamedAssertion> assertions;

  std::size_t n_outcome(std::string_view o) const {
    std::size_t k = 0;
    for (const auto& c : checks)
      if (c.outcome == o) ++k;
    return k;
  }

  /// Sorted unique rule ids that received at least one check.
  std::vector<int> rules_covered() const {
    std::vector<int> ids;
    for (const auto& c : checks) ids.push_back(c.rule_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
  }

  /// Every rule id in [1, rule_count] has at least one check.
  bool covers_all_rules(int rule_count) const {
    const auto ids = rules_covered();
    if (static_cast<int>(ids.size()) != rule_count) return false;
    for (int k = 0; k < rule_count; ++k)
      if (ids[static_cast<std::size_t>(k)] != k + 1) return false;
    return true;
  }

  bool checks_pass() const {
    for (const auto& c : checks)
      if (c.outcome == "fail") return false;
    return true;
  }

  bool counterexamples_confirmed() const {
    for (const auto& c : counterexamples)
      if (!c.confirmed) return false;
    return true;
  }

  bool assertions_passed() const {
    for (const auto& a : assertions)
      if (!a.passed) return false;
    return true;
  }

  /// No failing check, every counterexample confirmed, every assertion true.
  bool all_passed() const {
    return checks_pass() && counterexamples_confirmed() && assertions_passed();
  }
};

// ===== decision rule =====

namespace verify_detail {

inline constexpr double kZ975 = 1.959963984540054;   // 97.5% normal quantile
inline constexpr double kSigmaGate = 3.0;            // non-zero gate
inline constexpr double kZeroFloorFraction = 0.05;   // zero-width gate

struct Decision {
  bool nonzero = false;
  bool zero = false;
  double width = 0.0;
};

inline Decision decide(double estimate, double std_error, double zero_floor) {
  Decision d;
  d.width = 2.0 * kZ975 * std_error;
  d.nonzero = std::abs(estimate) > kSigmaGate * std_error;
  d.zero = !d.nonzero && d.width < kZeroFloorFraction * zero_floor;
  return d;
}

/// Risk of the best constant prediction: the natural scale of a loss on a
/// dataset where nothing is significant.
inline double constant_prediction_risk(const Dataset& eval,
                                       const LossFunction& loss) {
  const double c = mean(eval.y);
  double s = 0.0;
  for (std::size_t i = 0; i < eval.n(); ++i) s += loss(eval.y[i], c);
  return s / static_cast<double>(eval.n());
}

/// Largest significant importance in a result; `fallback` when none is.
inline double importance_scale(const FiResult& r, double fallback) {
  double best = 0.0;
  for (const auto& f : r.features)
    if (std::abs(f.importance) > kSigmaGate * f.std_error)
      best = std::max(best, std::abs(f.importance));
  return best > 0.0 ? best : fallback;
}

inline std::uint64_t string_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::vector<std::size_t> all_features(std::size_t p) {
  std::vector<std::size_t> idx(p);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

inline std::string join_names(const std::vector<std::string>& names,
                              const std::vector<std::size_t>& idx) {
  if (idx.empty()) return "{}";
  std::string s = "{";
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k) s += ",";
    s += names[idx[k]];
  }
  return s + "}";
}

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace verify_detail

// ===== interpretation-rule suite =====

struct Table1Options {
  std::size_t n = 10000;                // rows per regression generator
  std::size_t n_classification = 4000;  // rows for the parity generator
  double train_fraction = 0.7;
  std::size_t n_reps = 5;      // replacement draws per perturbation estimate
  std::size_t mc_draws = 50;   // completion draws for reduced models
  /// Completion draws used by zero-claims on the marginal route: the
  /// Monte-Carlo bias of the reduced model's risk (completion variance
  /// divided by the draw count) must sit well below the significance gate.
  std::size_t mc_draws_zero = 2000;
};

namespace verify_detail {

/// Shared state for one interpretation-rule run: lazily sampled datasets,
/// cached estimator results and refit engines, and the report under
/// construction.
class RuleSession {
 public:
  RuleSession(std::uint64_t seed, Table1Options opt)
      : seed_(seed), opt_(opt) {
    report_.suite = "table1";
    report_.seed = seed;
  }

  struct Prepared {
    DgpSpec dgp;
    Dataset train;
    Dataset test;
  };

  struct Gate {
    bool met = false;
    std::string text;
  };

  struct RowSpec {
    int id = 0;
    const char* rule = "";
    bool zero_claim = false;
  };

  VerificationReport& report() { return report_; }

  Prepared& prepared(const std::string& name) {
    auto it = prepared_.find(name);
    if (it != prepared_.end()) return it->second;
    DgpSpec d = builtin_dgp(name);
    const std::size_t n = d.task == Task::binary_classification
                              ? opt_.n_classification
                              : opt_.n;
    std::size_t index = 0;
    const auto& known = builtin_dgp_names();
    for (std::size_t k = 0; k < known.size(); ++k)
      if (known[k] == name) index = k;
    const Dataset data =
        d.sample(n, derive_seed(seed_, {seed_domain::dgp, index}));
    const Split s = split(data.n(), opt_.train_fraction,
                          derive_seed(seed_, {seed_domain::split, index}));
    Prepared p{std::move(d), data.subset_rows(s.train),
               data.subset_rows(s.test)};
    return prepared_.emplace(name, std::move(p)).first->second;
  }

  // ---- estimator runs (cached by key; seeds derived from the key) ----

  const FiResult& pfi_oracle(const std::string& name) {
    return cached("pfi:" + name, [&](std::uint64_t s) {
      Prepared& p = prepared(name);
      return pfi(oracle_model(p), p.test, loss_of(p), s, perturb_opts(p, false));
    });
  }

  const FiResult& cfi_oracle(const std::string& name) {
    return cached("cfi:" + name, [&](std::uint64_t s) {
      Prepared& p = prepared(name);
      return cfi(oracle_model(p), p.test, loss_of(p), s, perturb_opts(p, true));
    });
  }

  const FiResult& rfi_oracle(const std::string& name,
                             const std::vector<std::size_t>& given) {
    return cached("rfi:" + name + ":" + std::to_string(subset_mask(given)),
                  [&](std::uint64_t s) {
                    Prepared& p = prepared(name);
                    return relative_fi(oracle_model(p), p.test, loss_of(p),
                                       given, s,
                                       perturb_opts(p, !given.empty()));
                  });
  }

  const FiResult& msagevf_oracle(const std::string& name, std::size_t draws) {
    return cached("msagevf:" + name + ":" + std::to_string(draws),
                  [&](std::uint64_t s) {
                    Prepared& p = prepared(name);
                    auto provider =
                        make_marginal_provider(oracle_model(p), p.train, draws, s);
                    ValueFunctionCache cache(*provider, p.test, loss_of(p));
                    return single_feature_value_functions(cache, "msagevf");
                  });
  }

  const FiResult& csagevf_closed(const std::string& name) {
    return cached("csagevf:" + name, [&](std::uint64_t) {
      Prepared& p = prepared(name);
      auto provider = make_closed_form_provider(p.dgp.oracle, p.dgp.p);
      ValueFunctionCache cache(*provider, p.test, loss_of(p));
      return single_feature_value_functions(cache, "csagevf");
    });
  }

  const FiResult& scsagevf_rest_closed(const std::string& name) {
    return cached("scsagevf-rest:" + name, [&](std::uint64_t) {
      Prepared& p = prepared(name);
      auto provider = make_closed_form_provider(p.dgp.oracle, p.dgp.p);
      ValueFunctionCache cache(*provider, p.test, loss_of(p));
      return rest_conditional_increments(cache);
    });
  }

  const FiResult& scsagevf_given_closed(const std::string& name,
                                        const std::vector<std::size_t>& given) {
    return cached("scsagevf:" + name + ":" + std::to_string(subset_mask(given)),
                  [&](std::uint64_t) {
                    Prepared& p = prepared(name);
                    auto provider =
                        make_closed_form_provider(p.dgp.oracle, p.dgp.p);
                    ValueFunctionCache cache(*provider, p.test, loss_of(p));
                    return conditional_value_increments(cache, given);
                  });
  }

  RefitEngine& engine(const std::string& name, const std::string& learner) {
    const std::string key = "engine:" + name + ":" + learner;
    auto it = engines_.find(key);
    if (it != engines_.end()) return *it->second;
    Prepared& p = prepared(name);
    auto eng = std::make_unique<RefitEngine>(p.train, p.test, learner,
                                             loss_of(p), key_seed(key));
    return *engines_.emplace(key, std::move(eng)).first->second;
  }

  const FiResult& loco_refit(const std::string& name,
                             const std::string& learner) {
    return cached("loco:" + name + ":" + learner,
                  [&](std::uint64_t) { return loco(engine(name, learner)); });
  }

  const FiResult& loci_refit(const std::string& name,
                             const std::string& learner) {
    return cached("loci:" + name + ":" + learner,
                  [&](std::uint64_t) { return loci(engine(name, learner)); });
  }

  const FiResult& swvim_refit(const std::string& name,
                              const std::string& learner,
                              const std::vector<std::size_t>& given) {
    return cached("swvim:" + name + ":" + learner + ":" +
                      std::to_string(subset_mask(given)),
                  [&](std::uint64_t) {
                    return swvim(engine(name, learner), given);
                  });
  }

  // ---- check assembly ----

  /// Assumptions unsatisfied: record the gate, never run the estimator.
  void gate_vacuous(const RowSpec& row, const std::string& method,
                    const std::string& name, const std::string& model_kind,
                    std::size_t j, const std::vector<std::size_t>& given,
                    const Gate& gate) {
    ImplicationCheck c =
        shell(row, method, name, model_kind, j, given);
    c.assumptions = gate.text;
    c.assumptions_met = false;
    c.outcome = "vacuous";
    c.reason = "assumptions unsatisfied: " + gate.text;
    report_.checks.push_back(std::move(c));
  }

  /// Assumptions hold: judge the estimate against the rule.
  void judge(const RowSpec& row, const std::string& method,
             const std::string& name, const std::string& model_kind,
             std::size_t j, const std::vector<std::size_t>& given,
             const Gate& gate, const FiResult& result, bool truth_dep) {
    Prepared& p = prepared(name);
    const FiEstimate* e = result.find(p.dgp.feature_names[j]);
    require_compute(e != nullptr,
                    "verification: result lacks feature " +
                        p.dgp.feature_names[j]);
    const double floor = importance_scale(
        result, constant_prediction_risk(p.test, loss_of(p)));
    const Decision dec = decide(e->importance, e->std_error, floor);

    ImplicationCheck c = shell(row, method, name, model_kind, j, given);
    c.assumptions = gate.text;
    c.assumptions_met = true;
    c.estimate = e->importance;
    c.std_error = e->std_error;
    c.ci_width = dec.width;
    c.zero_floor = floor;
    c.claim_truth = row.zero_claim ? !truth_dep : truth_dep;

    if (row.zero_claim) {
      if (dec.zero) {
        c.triggered = true;
        c.outcome = c.claim_truth ? "pass" : "fail";
        c.reason = std::string("estimate certified zero; claims independence; "
                               "ground truth: ") +
                   (truth_dep ? "dependent" : "independent");
      } else if (dec.nonzero) {
        c.outcome = "vacuous";
        c.reason = "antecedent not triggered: estimate " + fmt(e->importance) +
                   " is significantly non-zero";
      } else {
        c.outcome = "vacuous";
        c.reason = "antecedent not triggered: interval width " +
                   fmt(dec.width) + " cannot certify zero against scale " +
                   fmt(floor);
      }
    } else {
      if (dec.nonzero) {
        c.triggered = true;
        c.outcome = c.claim_truth ? "pass" : "fail";
        c.reason = std::string("estimate significantly non-zero; claims "
                               "dependence; ground truth: ") +
                   (truth_dep ? "dependent" : "independent");
      } else {
        c.outcome = "vacuous";
        c.reason = "antecedent not triggered: estimate " + fmt(e->importance) +
                   " is within " + fmt(kSigmaGate) + " std errors of zero";
      }
    }
    report_.checks.push_back(std::move(c));
  }

  // ---- assumption gates ----

  Gate gate_always(std::string text) { return {true, std::move(text)}; }

  Gate gate_feature_indep(const std::string& name, std::size_t j) {
    Prepared& p = prepared(name);
    const bool ok = p.dgp.features_independent(j);
    return {ok, p.dgp.feature_names[j] + " independent of the other features: " +
                    (ok ? "holds" : "violated")};
  }

  Gate gate_feature_indep_given_target(const std::string& name, std::size_t j) {
    Prepared& p = prepared(name);
    const bool ok = p.dgp.features_independent_given_target(j);
    return {ok, p.dgp.feature_names[j] +
                    " independent of the other features given the target: " +
                    (ok ? "holds" : "violated")};
  }

  Gate gate_remainder_indep(const std::string& name, std::size_t j,
                            const std::vector<std::size_t>& given,
                            bool also_given_target) {
    Prepared& p = prepared(name);
    const auto rem = p.dgp.remainder(j, given);
    const bool base = p.dgp.remainder_independent_given_target(j, given);
    bool ok = base;
    std::string text = p.dgp.feature_names[j] + " independent of remainder " +
                       join_names(p.dgp.feature_names, rem) + " given " +
                       join_names(p.dgp.feature_names, given) +
                       " and the target: " + (base ? "holds" : "violated");
    if (also_given_target) {
      const bool extra = p.dgp.remainder_independent(j, given);
      ok = ok && extra;
      text += "; and given " + join_names(p.dgp.feature_names, given) +
              " alone: " + (extra ? "holds" : "violated");
    }
    return {ok, text};
  }

  Gate and_gate(Gate a, const Gate& b) {
    a.met = a.met && b.met;
    a.text += "; " + b.text;
    return a;
  }

  // ---- shared pieces ----

  PredictionModel oracle_model(Prepared& p) {
    return p.dgp.oracle(all_features(p.dgp.p));
  }

  LossFunction loss_of(const Prepared& p) const {
    return p.dgp.canonical_loss == LossKind::ce ? LossFunction::ce()
                                                : LossFunction::l2();
  }

  const Table1Options& options() const { return opt_; }

 private:
  PerturbOptions perturb_opts(Prepared& p, bool conditional) const {
    PerturbOptions o;
    o.n_reps = opt_.n_reps;
    o.reference = &p.train;
    if (conditional) {
      if (p.dgp.feature_gaussian) {
        o.sampler = "oracle";
        o.analytic = p.dgp.feature_gaussian;
      } else {
        o.sampler = "knn";
      }
    }
    return o;
  }

  ImplicationCheck shell(const RowSpec& row, const std::string& method,
                         const std::string& name,
                         const std::string& model_kind, std::size_t j,
                         const std::vector<std::size_t>& given) {
    Prepared& p = prepared(name);
    ImplicationCheck c;
    c.rule_id = row.id;
    c.rule = row.rule;
    c.method = method;
    c.dgp = name;
    c.model_kind = model_kind;
    c.feature = p.dgp.feature_names[j];
    for (std::size_t g : given) c.conditioning.push_back(p.dgp.feature_names[g]);
    return c;
  }

  std::uint64_t key_seed(const std::string& key) const {
    return derive_seed(seed_, {seed_domain::test, string_hash(key)});
  }

  template <typename Fn>
  const FiResult& cached(const std::string& key, Fn&& fn) {
    auto it = results_.find(key);
    if (it != results_.end()) return it->second;
    return results_.emplace(key, fn(key_seed(key))).first->second;
  }

  std::uint64_t seed_;
  Table1Options opt_;
  VerificationReport report_;
  std::map<std::string, Prepared> prepared_;
  std::map<std::string, FiResult> results_;
  std::map<std::string, std::unique_ptr<RefitEngine>> engines_;
};

}  // namespace verify_detail

/// Runs every interpretation rule as at least one executed or
/// explicitly-vacuous check over the built-in generators.
inline VerificationReport run_table1(std::uint64_t seed,
                                     const Table1Options& opt = {}) {
  using verify_detail::RuleSession;
  using verify_detail::all_features;
  verify_detail::Timer timer;
  RuleSession s(seed, opt);
  using Row = RuleSession::RowSpec;

  const std::vector<std::size_t> none;

  // ---------- marginal-association rules ----------

  {  // Rule 1: marginal replacement importance, non-zero direction.
    Row row{1,
            "non-zero marginal replacement importance implies marginal "
            "dependence, when the feature is independent of the others "
            "given the target",
            false};
    {  // y determines x1, so x1 is conditionally degenerate: gate holds.
      auto gate = s.gate_feature_indep_given_target("dgp_c", 0);
      s.judge(row, "pfi", "dgp_c", "oracle", 0, none, gate,
              s.pfi_oracle("dgp_c"), s.prepared("dgp_c").dgp.dep_target_marginal(0));
    }
    // duplicated feature: x2 = x1 stays coupled given the target.
    s.gate_vacuous(row, "pfi", "dgp_a", "oracle", 0, none,
                   s.gate_feature_indep_given_target("dgp_a", 0));
    // additive target: conditioning on it couples the two causes.
    s.gate_vacuous(row, "pfi", "dgp_g", "oracle", 0, none,
                   s.gate_feature_indep_given_target("dgp_g", 0));
  }

  {  // Rule 2: marginal replacement importance, zero direction.
    Row row{2,
            "zero marginal replacement importance implies marginal "
            "independence, for an optimal classifier under cross-entropy "
            "when the feature is independent of the others both jointly "
            "and given the target",
            true};
    // The parity generator is the only classification generator, and its
    // features are coupled given the target, so the gate cannot hold here.
    auto gate = s.and_gate(s.gate_feature_indep("dgp_b", 0),
                           s.gate_feature_indep_given_target("dgp_b", 0));
    s.gate_vacuous(row, "pfi", "dgp_b", "oracle", 0, none, gate);
  }

  {  // Rule 3: marginal value function, non-zero direction.
    Row row{3,
            "non-zero marginal single-feature value implies marginal "
            "dependence, for a loss-optimal model and a feature independent "
            "of the others",
            false};
    const char* optimal = "loss-optimal model (exact conditional expectation)";
    for (std::size_t j : {std::size_t{0}, std::size_t{1}}) {
      auto gate = s.and_gate(s.gate_always(optimal),
                             s.gate_feature_indep("dgp_g", j));
      s.judge(row, "msagevf", "dgp_g", "oracle", j, none, gate,
              s.msagevf_oracle("dgp_g", opt.mc_draws),
              s.prepared("dgp_g").dgp.dep_target_marginal(j));
    }
    {
      auto gate = s.and_gate(s.gate_always(optimal),
                             s.gate_feature_indep("dgp_d", 4));
      s.judge(row, "msagevf", "dgp_d", "oracle", 4, none, gate,
              s.msagevf_oracle("dgp_d", opt.mc_draws),
              s.prepared("dgp_d").dgp.dep_target_marginal(4));
    }
    // duplicated feature: marginally coupled, gate cannot hold.
    s.gate_vacuous(row, "msagevf", "dgp_a", "oracle", 0, none,
                   s.and_gate(s.gate_always(optimal),
                              s.gate_feature_indep("dgp_a", 0)));
  }

  {  // Rule 4: marginal value function, zero direction.
    Row row{4,
            "zero marginal single-feature value implies marginal "
            "independence, for an optimal classifier under cross-entropy "
            "and a feature independent of the others",
            true};
    const char* optimal =
        "cross-entropy-optimal classifier (exact class probabilities)";
    for (std::size_t j : {std::size_t{0}, std::size_t{1}}) {
      auto gate = s.and_gate(s.gate_always(optimal),
                             s.gate_feature_indep("dgp_b", j));
      s.judge(row, "msagevf", "dgp_b", "oracle", j, none, gate,
              s.msagevf_oracle("dgp_b", opt.mc_draws_zero),
              s.prepared("dgp_b").dgp.dep_target_marginal(j));
    }
  }

  {  // Rule 5: conditional value function, non-zero direction.
    Row row{5,
            "non-zero conditional single-feature value implies marginal "
            "dependence, for a loss-optimal model",
            false};
    auto gate = s.gate_always("loss-optimal model (exact conditional expectation)");
    s.judge(row, "csagevf", "dgp_c", "oracle", 1, none, gate,
            s.csagevf_closed("dgp_c"),
            s.prepared("dgp_c").dgp.dep_target_marginal(1));
    for (std::size_t j : {std::size_t{2}, std::size_t{4}})
      s.judge(row, "csagevf", "dgp_d", "oracle", j, none, gate,
              s.csagevf_closed("dgp_d"),
              s.prepared("dgp_d").dgp.dep_target_marginal(j));
  }

  {  // Rule 6: conditional value function, zero direction.
    Row row{6,
            "zero conditional single-feature value implies marginal "
            "independence, for an optimal classifier under cross-entropy",
            true};
    auto gate = s.gate_always(
        "cross-entropy-optimal classifier (exact class probabilities)");
    for (std::size_t j : {std::size_t{0}, std::size_t{1}})
      s.judge(row, "csagevf", "dgp_b", "oracle", j, none, gate,
              s.csagevf_closed("dgp_b"),
              s.prepared("dgp_b").dgp.dep_target_marginal(j));
  }

  {  // Rule 7: single-feature refit, non-zero direction.
    Row row{7,
            "non-zero single-feature refit improvement implies marginal "
            "dependence, for loss-optimal refits",
            false};
    auto gate = s.gate_always(
        "refits are risk minimizers of a correctly-specified family");
    for (std::size_t j : {std::size_t{0}, std::size_t{1}})
      s.judge(row, "loci", "dgp_c", "ols", j, none, gate,
              s.loci_refit("dgp_c", "ols"),
              s.prepared("dgp_c").dgp.dep_target_marginal(j));
    s.judge(row, "loci", "dgp_g", "ols", 1, none, gate,
            s.loci_refit("dgp_g", "ols"),
            s.prepared("dgp_g").dgp.dep_target_marginal(1));
  }

  {  // Rule 8: single-feature refit, zero direction.
    Row row{8,
            "zero single-feature refit improvement implies marginal "
            "independence, for cross-entropy-optimal refits",
            true};
    auto gate = s.gate_always(
        "bagged-tree refits approximate the optimal classifier");
    for (std::size_t j : {std::size_t{0}, std::size_t{1}})
      s.judge(row, "loci", "dgp_b", "bagged_trees", j, none, gate,
              s.loci_refit("dgp_b", "bagged_trees"),
              s.prepared("dgp_b").dgp.dep_target_marginal(j));
  }

  // ---------- conditional-on-the-rest rules ----------

  {  // Rule 9: conditional replacement importance, non-zero direction.
    Row row{9,
            "non-zero conditional replacement importance implies dependence "
            "on the target given all other features (no assumptions)",
            false};
    auto gate = s.gate_always("none");
    for (std::size_t j : {std::size_t{3}, std::size_t{4}})
      s.judge(row, "cfi", "dgp_d", "oracle", j, none, gate,
              s.cfi_oracle("dgp_d"),
              s.prepared("dgp_d").dgp.dep_target_given_rest(j));
    s.judge(row, "cfi", "dgp_c", "oracle", 0, none, gate,
            s.cfi_oracle("dgp_c"),
            s.prepared("dgp_c").dgp.dep_target_given_rest(0));
  }

  {  // Rule 10: conditional replacement importance, zero direction.
    Row row{10,
            "zero conditional replacement importance implies independence "
            "of the target given all other features, for an optimal "
            "classifier under cross-entropy",
            true};
    auto gate = s.gate_always(
        "cross-entropy-optimal classifier (exact class probabilities)");
    // Parity: every feature is conditionally determining, so the zero
    // antecedent can never fire on this catalogue's classification data.
    s.judge(row, "cfi", "dgp_b", "oracle", 0, none, gate,
            s.cfi_oracle("dgp_b"),
            s.prepared("dgp_b").dgp.dep_target_given_rest(0));
  }

  {  // Rule 11: rest-conditioned value increment, non-zero direction.
    Row row{11,
            "non-zero value increment over all other features implies "
            "dependence on the target given them, for a loss-optimal model",
            false};
    auto gate = s.gate_always("loss-optimal model (exact conditional expectation)");
    for (std::size_t j : {std::size_t{3}, std::size_t{4}})
      s.judge(row, "scsagevf", "dgp_d", "oracle", j, none, gate,
              s.scsagevf_rest_closed("dgp_d"),
              s.prepared("dgp_d").dgp.dep_target_given_rest(j));
  }

  {  // Rule 12: rest-conditioned value increment, zero direction.
    Row row{12,
            "zero value increment over all other features implies "
            "independence of the target given them, for an optimal "
            "classifier under cross-entropy",
            true};
    auto gate = s.gate_always(
        "cross-entropy-optimal classifier (exact class probabilities)");
    s.judge(row, "scsagevf", "dgp_b", "oracle", 0, none, gate,
            s.scsagevf_rest_closed("dgp_b"),
            s.prepared("dgp_b").dgp.dep_target_given_rest(0));
  }

  {  // Rule 13: leave-one-out refit, non-zero direction.
    Row row{13,
            "non-zero leave-one-out refit increase implies dependence on "
            "the target given all other features, for loss-optimal refits",
            false};
    auto gate = s.gate_always(
        "refits are risk minimizers of a correctly-specified family");
    for (std::size_t j : {std::size_t{3}, std::size_t{4}})
      s.judge(row, "loco", "dgp_d", "ols_interactions", j, none, gate,
              s.loco_refit("dgp_d", "ols_interactions"),
              s.prepared("dgp_d").dgp.dep_target_given_rest(j));
    s.judge(row, "loco", "dgp_g", "ols", 0, none, gate,
            s.loco_refit("dgp_g", "ols"),
            s.prepared("dgp_g").dgp.dep_target_given_rest(0));
  }

  {  // Rule 14: leave-one-out refit, zero direction.
    Row row{14,
            "zero leave-one-out refit increase implies independence of the "
            "target given all other features, for cross-entropy-optimal "
            "refits",
            true};
    auto gate = s.gate_always(
        "bagged-tree refits approximate the optimal classifier");
    s.judge(row, "loco", "dgp_b", "bagged_trees", 0, none, gate,
            s.loco_refit("dgp_b", "bagged_trees"),
            s.prepared("dgp_b").dgp.dep_target_given_rest(0));
  }

  // ---------- conditional-on-a-chosen-set rules ----------

  {  // Rule 15: relative replacement importance, non-zero direction.
    Row row{15,
            "non-zero replacement importance relative to a set G implies "
            "dependence on the target given G, when the feature is "
            "independent of the remaining features given G and the target",
            false};
    {
      const std::vector<std::size_t> g{1};
      auto gate = s.gate_remainder_indep("dgp_b", 0, g, false);
      s.judge(row, "rfi", "dgp_b", "oracle", 0, g, gate,
              s.rfi_oracle("dgp_b", g),
              s.prepared("dgp_b").dgp.dep_target_given(0, g));
    }
    {
      const std::vector<std::size_t> g{1};
      auto gate = s.gate_remainder_indep("dgp_c", 0, g, false);
      s.judge(row, "rfi", "dgp_c", "oracle", 0, g, gate,
              s.rfi_oracle("dgp_c", g),
              s.prepared("dgp_c").dgp.dep_target_given(0, g));
    }
    {
      const std::vector<std::size_t> g{3};
      auto gate = s.gate_remainder_indep("dgp_d", 4, g, false);
      s.judge(row, "rfi", "dgp_d", "oracle", 4, g, gate,
              s.rfi_oracle("dgp_d", g),
              s.prepared("dgp_d").dgp.dep_target_given(4, g));
    }
    // With an empty set this is the marginal estimator, and the additive
    // target couples its causes once conditioned on: gate fails.
    s.gate_vacuous(row, "rfi", "dgp_g", "oracle", 0, none,
                   s.gate_remainder_indep("dgp_g", 0, none, false));
  }

  {  // Rule 16: relative replacement importance, zero direction.
    Row row{16,
            "zero replacement importance relative to a set G implies "
            "independence of the target given G, for an optimal classifier "
            "under cross-entropy when the feature is independent of the "
            "remaining features given G, with and without the target",
            true};
    const std::vector<std::size_t> g{1};
    auto gate = s.and_gate(
        s.gate_always(
            "cross-entropy-optimal classifier (exact class probabilities)"),
        s.gate_remainder_indep("dgp_b", 0, g, true));
    s.judge(row, "rfi", "dgp_b", "oracle", 0, g, gate,
            s.rfi_oracle("dgp_b", g),
            s.prepared("dgp_b").dgp.dep_target_given(0, g));
  }

  {  // Rule 17: value increment over a chosen set, non-zero direction.
    Row row{17,
            "non-zero conditional value increment over a set G implies "
            "dependence on the target given G, for a loss-optimal model",
            false};
    auto gate = s.gate_always("loss-optimal model (exact conditional expectation)");
    {
      const std::vector<std::size_t> g{0};
      s.judge(row, "scsagevf", "dgp_d", "oracle", 2, g, gate,
              s.scsagevf_given_closed("dgp_d", g),
              s.prepared("dgp_d").dgp.dep_target_given(2, g));
    }
    {
      const std::vector<std::size_t> g{0};
      s.judge(row, "scsagevf", "dgp_g", "oracle", 1, g, gate,
              s.scsagevf_given_closed("dgp_g", g),
              s.prepared("dgp_g").dgp.dep_target_given(1, g));
    }
  }

  {  // Rule 18: value increment over a chosen set, zero direction.
    Row row{18,
            "zero conditional value increment over a set G implies "
            "independence of the target given G, for an optimal classifier "
            "under cross-entropy",
            true};
    auto gate = s.gate_always(
        "cross-entropy-optimal classifier (exact class probabilities)");
    for (std::size_t j : {std::size_t{0}, std::size_t{1}})
      s.judge(row, "scsagevf", "dgp_b", "oracle", j, none, gate,
              s.scsagevf_given_closed("dgp_b", none),
              s.prepared("dgp_b").dgp.dep_target_given(j, none));
  }

  {  // Rule 19: staged refit against a kept set, non-zero direction.
    Row row{19,
            "non-zero refit improvement from adding a feature to a kept set "
            "G implies dependence on the target given G, for loss-optimal "
            "refits",
            false};
    auto gate = s.gate_always(
        "refits are risk minimizers of a correctly-specified family");
    {
      const std::vector<std::size_t> g{3};
      s.judge(row, "swvim", "dgp_d", "ols_interactions", 4, g, gate,
              s.swvim_refit("dgp_d", "ols_interactions", g),
              s.prepared("dgp_d").dgp.dep_target_given(4, g));
    }
    {
      const std::vector<std::size_t> g{1};
      s.judge(row, "swvim", "dgp_c", "ols", 0, g, gate,
              s.swvim_refit("dgp_c", "ols", g),
              s.prepared("dgp_c").dgp.dep_target_given(0, g));
    }
  }

  {  // Rule 20: staged refit against a kept set, zero direction.
    Row row{20,
            "zero refit improvement from adding a feature to a kept set G "
            "implies independence of the target given G, for cross-entropy-"
            "optimal refits",
            true};
    auto gate = s.gate_always(
        "bagged-tree refits approximate the optimal classifier");
    for (std::size_t j : {std::size_t{0}, std::size_t{1}})
      s.judge(row, "swvim", "dgp_b", "bagged_trees", j, none, gate,
              s.swvim_refit("dgp_b", "bagged_trees", none),
              s.prepared("dgp_b").dgp.dep_target_given(j, none));
  }

  VerificationReport report = std::move(s.report());
  report.notes.push_back(
      "decision rule: non-zero iff |estimate| > 3 std errors; zero iff "
      "within 3 std errors and 95% interval width < 0.05 x importance scale");
  report.notes.push_back(
      "rows per generator: " + std::to_string(opt.n) + " (" +
      std::to_string(opt.n_classification) +
      " for classification), train fraction " +
      verify_detail::fmt(opt.train_fraction));
  report.runtime_ms = timer.elapsed_ms();
  return report;
}

// ===== counterexample suite =====

struct CounterexampleOptions {
  std::size_t n_large = 50000;  // marginal replacement on the duplicated pair
  std::size_t n = 10000;        // everything else
  std::size_t n_reps_large = 20;
  std::size_t n_reps = 5;
  std::size_t mc_draws = 50;
};

/// Reproduces the five encoded failure modes. Each check passes only when
/// the numeric signature appears AND the exact ground truth contradicts the
/// naive reading of the estimate.
inline VerificationReport run_counterexamples(
    std::uint64_t seed, const CounterexampleOptions& opt = {}) {
  using verify_detail::all_features;
  using verify_detail::decide;
  using verify_detail::fmt;
  using verify_detail::kSigmaGate;
  verify_detail::Timer timer;

  VerificationReport report;
  report.suite = "counterexamples";
  report.seed = seed;

  const auto difference_model = [](const std::vector<std::string>& names) {
    return make_row_model("difference", names, Task::regression,
                          [](const double* x) { return x[0] - x[1]; });
  };

  {  // 1. Marginal replacement rewards a feature the target never touches.
    DgpSpec d = builtin_dgp("dgp_a");
    const Dataset data =
        d.sample(opt.n_large, derive_seed(seed, {seed_domain::dgp, 0}));
    PerturbOptions po;
    po.n_reps = opt.n_reps_large;
    const FiResult r =
        pfi(difference_model(d.feature_names), data, LossFunction::l2(),
            derive_seed(seed, {seed_domain::test, 1}), po);
    const FiEstimate* e = r.find("x1");
    const bool independent_everywhere =
        !d.dep_target_marginal(0) && !d.exists_dependence_set(0);
    CounterexampleCheck c;
    c.name = "marginal-replacement-extrapolation";
    c.dgp = d.name;
    c.estimate = e->importance;
    c.std_error = e->std_error;
    c.confirmed = e->importance > 1.7 && e->importance < 2.3 &&
                  e->importance > kSigmaGate * e->std_error &&
                  independent_everywhere;
    c.detail =
        "estimate " + fmt(e->importance) +
        " (analytic 2) for a loss-optimal model although the feature is "
        "independent of the target under every conditioning set; replacing "
        "it breaks the x2 = x1 coupling, lifting the risk from 1 to 3. With "
        "an empty conditioning set the relative estimator is this same "
        "quantity, so the signature covers both.";
    report.counterexamples.push_back(std::move(c));
  }

  {  // 2. Marginal replacement explodes on an interaction with independent
     //    features.
    DgpSpec d = builtin_dgp("dgp_b");
    const Dataset data =
        d.sample(opt.n, derive_seed(seed, {seed_domain::dgp, 1}));
    PerturbOptions po;
    po.n_reps = opt.n_reps;
    const FiResult r =
        pfi(d.oracle(all_features(d.p)), data, LossFunction::ce(),
            derive_seed(seed, {seed_domain::test, 2}), po);
    const FiEstimate* e = r.find("x1");
    CounterexampleCheck c;
    c.name = "marginal-replacement-interaction";
    c.dgp = d.name;
    c.estimate = e->importance;
    c.std_error = e->std_error;
    c.confirmed = e->importance > 5.0 && e->importance < 30.0 &&
                  e->importance > kSigmaGate * e->std_error &&
                  !d.dep_target_marginal(0) && d.features_independent(0);
    c.detail =
        "estimate " + fmt(e->importance) +
        " for an exact-probability classifier on pairwise-independent "
        "binary features: replacement flips the parity target on half the "
        "rows, so the cross-entropy of a confidently wrong prediction "
        "dominates, although the feature alone is independent of the target.";
    report.counterexamples.push_back(std::move(c));
  }

  {  // 3. Everything-zero despite real (second-moment) dependence.
    DgpSpec d = builtin_dgp("dgp_e");
    const Dataset data =
        d.sample(opt.n, derive_seed(seed, {seed_domain::dgp, 4}));
    const PredictionModel model = d.oracle(all_features(d.p));
    PerturbOptions po;
    po.n_reps = opt.n_reps;
    const FiResult rp = pfi(model, data, LossFunction::l2(),
                            derive_seed(seed, {seed_domain::test, 3}), po);
    PerturbOptions pc = po;
    pc.sampler = "oracle";
    pc.analytic = d.feature_gaussian;
    const FiResult rc = cfi(model, data, LossFunction::l2(),
                            derive_seed(seed, {seed_domain::test, 4}), pc);
    const FiEstimate* ep = rp.find("x1");
    const FiEstimate* ec = rc.find("x1");
    const bool both_zero =
        std::abs(ep->importance) <= kSigmaGate * ep->std_error &&
        std::abs(ec->importance) <= kSigmaGate * ec->std_error;
    CounterexampleCheck c;
    c.name = "zero-despite-variance-dependence";
    c.dgp = d.name;
    c.estimate = ec->importance;
    c.std_error = ec->std_error;
    c.confirmed = both_zero && d.dep_target_given_rest(0);
    c.detail =
        "marginal estimate " + fmt(ep->importance) + " and conditional estimate " +
        fmt(ec->importance) +
        " are both zero for the optimal squared-error model, yet the feature "
        "drives the target's conditional variance: optimal-mean predictions "
        "cannot see second-moment dependence.";
    report.counterexamples.push_back(std::move(c));
  }

  {  // 4. Marginal value functions punish an optimal model for a feature
     //    the target never touches.
    DgpSpec d = builtin_dgp("dgp_a");
    const Dataset data =
        d.sample(opt.n, derive_seed(seed, {seed_domain::dgp, 5}));
    auto provider =
        make_marginal_provider(difference_model(d.feature_names), data,
                               opt.mc_draws,
                               derive_seed(seed, {seed_domain::test, 5}));
    ValueFunctionCache cache(*provider, data, LossFunction::l2());
    auto ev = cache.evaluate(1);  // subset {x1}
    const FiEstimate e =
        FiEstimate::from_per_instance("x1", std::move(ev.per_instance));
    const bool independent_everywhere =
        !d.dep_target_marginal(0) && !d.exists_dependence_set(0);
    CounterexampleCheck c;
    c.name = "marginal-value-extrapolation";
    c.dgp = d.name;
    c.estimate = e.importance;
    c.std_error = e.std_error;
    c.confirmed = e.importance > -1.35 && e.importance < -0.65 &&
                  e.importance < -kSigmaGate * e.std_error &&
                  independent_everywhere;
    c.detail =
        "single-feature value " + fmt(e.importance) +
        " although the feature is independent of the target under every "
        "conditioning set: the prediction-averaged restricted model x1 has "
        "risk 2 against baseline 1, so the analytic value is -1. (Averaging "
        "losses over completions instead of averaging predictions would "
        "give risk 3, i.e. value -2.)";
    report.counterexamples.push_back(std::move(c));
  }

  {  // 5. Value functions are negative for a suboptimal model even with
     //    fully independent features.
    DgpSpec d = builtin_dgp("dgp_f");
    const Dataset data =
        d.sample(opt.n, derive_seed(seed, {seed_domain::dgp, 6}));
    const PredictionModel model =
        make_row_model("projection", d.feature_names, Task::regression,
                       [](const double* x) { return x[0]; });
    auto mprov = make_marginal_provider(
        model, data, opt.mc_draws, derive_seed(seed, {seed_domain::test, 6}));
    ValueFunctionCache mcache(*mprov, data, LossFunction::l2());
    auto mev = mcache.evaluate(1);
    const FiEstimate em =
        FiEstimate::from_per_instance("x1", std::move(mev.per_instance));
    auto cprov = make_conditional_provider(
        model, data, "oracle", opt.mc_draws, {}, d.feature_gaussian,
        derive_seed(seed, {seed_domain::test, 7}));
    ValueFunctionCache ccache(*cprov, data, LossFunction::l2());
    auto cev = ccache.evaluate(1);
    const FiEstimate ec =
        FiEstimate::from_per_instance("x1", std::move(cev.per_instance));
    CounterexampleCheck c;
    c.name = "value-of-suboptimal-model";
    c.dgp = d.name;
    c.estimate = ec.importance;
    c.std_error = ec.std_error;
    c.confirmed = em.importance < -kSigmaGate * em.std_error &&
                  ec.importance < -kSigmaGate * ec.std_error &&
                  !d.dep_target_marginal(0) && d.features_independent(0);
    c.detail =
        "marginal value " + fmt(em.importance) + " and conditional value " +
        fmt(ec.importance) +
        " are significantly negative for a model predicting a feature that "
        "is independent of target and features alike: restricting a "
        "suboptimal model can beat it, so value signs reflect model "
        "optimality, not dependence.";
    report.counterexamples.push_back(std::move(c));
  }

  report.runtime_ms = timer.elapsed_ms();
  return report;
}

// ===== benchmark reproduction suite =====

inline LearnerOptions figure2_tree_options() {
  LearnerOptions o;
  o.n_trees = 20;  // single-core budget; rankings are stable well below 100
  return o;
}

struct Figure2Options {
  std::size_t n = 10000;
  double train_fraction = 0.7;
  std::size_t repetitions = 50;
  /// Refit and reduced-model pipelines on stochastic learners redo their
  /// model fits every repetition; they run fewer repetitions to keep the
  /// suite inside its runtime budget (counts are recorded per entry).
  std::size_t heavy_repetitions = 5;
  std::size_t n_reps = 5;      // replacement draws inside one estimate
  std::size_t mc_draws = 50;   // completion draws (deterministic learners)
  /// Single-feature conditional values carry a completion-variance bias of
  /// about -Var/draws; the near-zero relative-importance bands need enough
  /// draws to push that bias well under the band.
  std::size_t conditional_mc_draws = 150;
  std::size_t tree_mc_draws = 20;
  std::vector<std::string> learners = {"ols_interactions", "bagged_trees"};
  LearnerOptions tree_options = figure2_tree_options();
};

/// Runs the five-feature benchmark: seven estimators per learner with
/// repetitions, emits the relative-importance table, and asserts the
/// expected qualitative orderings.
inline VerificationReport run_figure2(std::uint64_t seed,
                                      const Figure2Options& opt = {}) {
  using verify_detail::fmt;
  verify_detail::Timer timer;

  VerificationReport report;
  report.suite = "figure2";
  report.seed = seed;

  DgpSpec d = builtin_dgp("dgp_d");
  const Dataset data = d.sample(opt.n, derive_seed(seed, {seed_domain::dgp, 3}));
  const Split sp =
      split(data.n(), opt.train_fraction, derive_seed(seed, {seed_domain::split, 3}));
  const Dataset train = data.subset_rows(sp.train);
  const Dataset test = data.subset_rows(sp.test);
  const LossFunction loss = LossFunction::l2();

  const std::vector<std::string> methods = {"pfi",      "cfi",  "msagevf",
                                            "csagevf",  "scsagevf",
                                            "loco",     "loci"};

  for (std::size_t li = 0; li < opt.learners.size(); ++li) {
    const std::string& learner = opt.learners[li];
    const bool stochastic = learner == "bagged_trees";
    const LearnerOptions lopts = stochastic ? opt.tree_options : LearnerOptions{};
    const std::size_t mc_draws = stochastic ? opt.tree_mc_draws : opt.mc_draws;
    const std::size_t heavy_reps =
        stochastic ? opt.heavy_repetitions : opt.repetitions;

    const PredictionModel model = fit_learner(
        learner, train, derive_seed(seed, {seed_domain::learner, li}), lopts);

    // per method: one vector of repetition estimates per feature
    std::map<std::string, std::vector<std::vector<double>>> reps;
    for (const auto& m : methods)
      reps[m].assign(d.p, {});
    const auto push = [&](const FiResult& r, const std::string& m) {
      for (std::size_t j = 0; j < d.p; ++j) {
        const FiEstimate* e = r.find(d.feature_names[j]);
        require_compute(e != nullptr, "benchmark: missing feature estimate");
        reps[m][j].push_back(e->importance);
      }
    };
    const auto rep_seed = [&](std::size_t pipeline, std::size_t r) {
      return derive_seed(seed, {seed_domain::resample, li, pipeline, r});
    };

    // pipeline 0: marginal replacement
    for (std::size_t r = 0; r < opt.repetitions; ++r) {
      PerturbOptions po;
      po.n_reps = opt.n_reps;
      po.reference = &train;
      push(pfi(model, test, loss, rep_seed(0, r), po), "pfi");
    }
    // pipeline 1: conditional replacement (exact feature distribution)
    for (std::size_t r = 0; r < opt.repetitions; ++r) {
      PerturbOptions po;
      po.n_reps = opt.n_reps;
      po.reference = &train;
      po.sampler = "oracle";
      po.analytic = d.feature_gaussian;
      push(cfi(model, test, loss, rep_seed(1, r), po), "cfi");
    }
    // pipeline 2: marginal reduced models
    for (std::size_t r = 0; r < heavy_reps; ++r) {
      auto provider =
          make_marginal_provider(model, train, mc_draws, rep_seed(2, r));
      ValueFunctionCache cache(*provider, test, loss);
      push(single_feature_value_functions(cache, "msagevf"), "msagevf");
    }
    // pipeline 3: conditional reduced models (single features + increments)
    const std::size_t cond_draws =
        stochastic ? opt.tree_mc_draws : opt.conditional_mc_draws;
    for (std::size_t r = 0; r < heavy_reps; ++r) {
      auto provider = make_conditional_provider(
          model, train, "oracle", cond_draws, {}, d.feature_gaussian,
          rep_seed(3, r));
      ValueFunctionCache cache(*provider, test, loss);
      push(single_feature_value_functions(cache, "csagevf"), "csagevf");
      push(rest_conditional_increments(cache), "scsagevf");
    }
    // pipeline 4: refits (leave-one-out and single-feature)
    for (std::size_t r = 0; r < heavy_reps; ++r) {
      RefitOptions ro;
      ro.learner_opts = lopts;
      RefitEngine eng(train, test, learner, loss, rep_seed(4, r), ro);
      push(loco(eng), "loco");
      push(loci(eng), "loci");
    }

    // reduce to table entries
    for (const auto& m : methods) {
      std::vector<double> means(d.p, 0.0), sds(d.p, 0.0);
      double max_pos = 0.0;
      for (std::size_t j = 0; j < d.p; ++j) {
        const auto& v = reps[m][j];
        means[j] = mean(v);
        sds[j] = v.size() > 1 ? sample_sd(v) : 0.0;
        max_pos = std::max(max_pos, means[j]);
      }
      for (std::size_t j = 0; j < d.p; ++j) {
        Figure2Entry e;
        e.learner = learner;
        e.method = m;
        e.feature = d.feature_names[j];
        e.mean_importance = means[j];
        e.sd_importance = sds[j];
        e.relative = max_pos > 0.0 ? means[j] / max_pos : 0.0;
        e.repetitions = reps[m][0].size();
        report.figure2.push_back(std::move(e));
      }
    }
  }

  // ---- qualitative assertions ----
  const auto entry = [&](const std::string& learner, const std::string& m,
                         const std::string& f) -> const Figure2Entry* {
    for (const auto& e : report.figure2)
      if (e.learner == learner && e.method == m && e.feature == f) return &e;
    return nullptr;
  };
  const auto assert_that = [&](std::string desc, bool ok) {
    report.assertions.push_back({std::move(desc), ok});
  };

  const bool has_lm =
      std::find(opt.learners.begin(), opt.learners.end(),
                "ols_interactions") != opt.learners.end();
  if (has_lm) {
    const std::string lm = "ols_interactions";
    for (const std::string m : {"cfi", "loco", "scsagevf"}) {
      assert_that(m + "/" + lm + ": x5 is the top feature (relative 1.0)",
                  entry(lm, m, "x5")->relative >= 0.999);
      for (const std::string f : {"x1", "x2", "x3"})
        assert_that(m + "/" + lm + ": " + f + " relative importance < 0.05",
                    std::abs(entry(lm, m, f)->relative) < 0.05);
    }
    for (const std::string m : {"loci", "csagevf"}) {
      for (const std::string f : {"x3", "x4", "x5"})
        assert_that(m + "/" + lm + ": " + f + " relative importance > 0.1",
                    entry(lm, m, f)->relative > 0.1);
      for (const std::string f : {"x1", "x2"})
        assert_that(m + "/" + lm + ": " + f + " relative importance < 0.05",
                    std::abs(entry(lm, m, f)->relative) < 0.05);
    }
    for (const std::string f : {"x1", "x2"})
      assert_that(
          "pfi/" + lm + ": " + f +
              " relative importance > 0.05 (fitted near-cancelling pair)",
          entry(lm, "pfi", f)->relative > 0.05);
    for (const std::string f : {"x1", "x2"})
      assert_that("msagevf/" + lm + ": " + f + " mean importance < 0",
                  entry(lm, "msagevf", f)->mean_importance < 0.0);
  }
  // The directly-causal feature must sit in every estimator's top feature
  // set. Bounds differ by what each estimator can promise: single-feature
  // methods rate x3, x4, x5 almost equally by construction, and marginal
  // replacement may legitimately rank the fitted near-cancelling pair above
  // everything (that is the benchmark's point), so those get membership
  // bounds rather than near-maximality.
  for (const auto& learner : opt.learners) {
    for (const std::string m : {"cfi", "msagevf", "scsagevf", "loco"})
      assert_that(m + "/" + learner +
                      ": x5 within the top feature set (relative > 0.8)",
                  entry(learner, m, "x5")->relative > 0.8);
    for (const std::string m : {"loci", "csagevf"}) {
      const double x5 = entry(learner, m, "x5")->relative;
      assert_that(m + "/" + learner +
                      ": x5 clearly positive (relative > 0.5) and above the "
                      "misranked pair",
                  x5 > 0.5 && x5 > entry(learner, m, "x1")->relative &&
                      x5 > entry(learner, m, "x2")->relative);
    }
    assert_that("pfi/" + learner +
                    ": x5 within the top feature set (relative > 0.5)",
                entry(learner, "pfi", "x5")->relative > 0.5);
  }

  report.notes.push_back(
      "protocol: n=" + std::to_string(opt.n) + ", train fraction " +
      fmt(opt.train_fraction) + ", repetitions " +
      std::to_string(opt.repetitions) + " (" +
      std::to_string(opt.heavy_repetitions) +
      " for refit/reduced-model pipelines on stochastic learners), "
      "completion draws " +
      std::to_string(opt.mc_draws) + " marginal / " +
      std::to_string(opt.conditional_mc_draws) + " conditional (" +
      std::to_string(opt.tree_mc_draws) + " for bagged trees)");
  report.notes.push_back(
      "relative importance = mean estimate / largest positive mean within "
      "the same learner-method group");
  report.runtime_ms = timer.elapsed_ms();
  return report;
}

}  // namespace lofi
