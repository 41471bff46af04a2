#pragma once
//
// Refitting-family importance: retrain the learner on feature subsets and
// compare held-out risks. Unlike the perturbation and reduction families,
// these estimators ask what the LEARNER can do without a feature, not what a
// fixed fitted model does.
//
//   loco_j          = risk(refit without j)  - risk(full refit)
//   group_loco(S)   = risk(refit without S)  - risk(full refit)
//   swvim_j given G = risk(refit keeping G)  - risk(refit keeping G + {j})
//   loci_j          = swvim_j given {}  (constant baseline vs univariate)
//
// Every subset is refit once per evaluation plan and cached by its kept-set
// bitmask; the refit RNG stream is also keyed by that mask, so any two
// routes that retrain on the same kept set produce bit-identical models and
// therefore bit-identical risks (e.g. loco_j == group_loco({j}) exactly).
//
// Plans: "holdout" fits on a shuffled train part and scores the test part;
// "kfold" scores every row exactly once via cross-fitting. Per-instance loss
// differences are aligned row-by-row in both plans, which is what makes the
// downstream paired inference valid.
//
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lofi/dataset.hpp"
#include "lofi/errors.hpp"
#include "lofi/fi_result.hpp"
#include "lofi/learners.hpp"
#include "lofi/loss.hpp"
#include "lofi/marginal.hpp"
#include "lofi/model.hpp"
#include "lofi/resampling.hpp"
#include "lofi/rng.hpp"
#include "lofi/stats.hpp"

namespace lofi {

struct RefitOptions {
  std::string plan = "holdout";  // "holdout" or "kfold"
  double train_fraction = 0.7;   // holdout plan
  int folds = 5;                 // kfold plan
  LearnerOptions learner_opts;
};

/// Held-out performance of one retrained feature subset.
struct RefitEvaluation {
  double risk = 0.0;
  /// Held-out per-row losses, aligned across subsets (same rows, same order).
  std::vector<double> per_instance;
};

/// Retrains a learner on kept-feature subsets under a fixed evaluation plan
/// and caches the held-out losses per subset.
class RefitEngine {
 public:
  RefitEngine(const Dataset& data, std::string learner, LossFunction loss,
              std::uint64_t seed, RefitOptions opt = {})
      : learner_(std::move(learner)), loss_(loss), seed_(seed),
        opt_(std::move(opt)) {
    require_config(opt_.plan == "holdout" || opt_.plan == "kfold",
                   "refit: unknown plan '" + opt_.plan +
                       "' (expected holdout or kfold)");
    if (opt_.plan == "holdout") {
      const Split s = split(data.n(), opt_.train_fraction, seed_);
      pairs_.push_back({data.subset_rows(s.train), data.subset_rows(s.test)});
    } else {
      for (const Split& s : kfold(data.n(), opt_.folds, seed_))
        pairs_.push_back({data.subset_rows(s.train), data.subset_rows(s.test)});
    }
  }

  /// Plan with a caller-provided train/test pair (no internal splitting).
  RefitEngine(Dataset train, Dataset test, std::string learner,
              LossFunction loss, std::uint64_t seed, RefitOptions opt = {})
      : learner_(std::move(learner)), loss_(loss), seed_(seed),
        opt_(std::move(opt)) {
    require_data(train.p() == test.p() &&
                     train.feature_names == test.feature_names,
                 "refit: train and test schemas differ");
    opt_.plan = "external";
    pairs_.push_back({std::move(train), std::move(test)});
  }

  /// Feature schema (names, width, task) shared by all fit pairs.
  const Dataset& schema() const { return pairs_.front().train; }
  const std::string& learner_name() const { return learner_; }
  const LossFunction& loss() const { return loss_; }
  const RefitOptions& options() const { return opt_; }

  /// Risk of the learner retrained on exactly `kept` (cached by bitmask).
  const RefitEvaluation& evaluate_keep(const std::vector<std::size_t>& kept) {
    for (std::size_t j : kept)
      require_config(j < schema().p(), "refit: kept feature index out of range");
    const std::uint64_t mask = subset_mask(kept);
    auto it = cache_.find(mask);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(mask, evaluate_uncached(kept, mask)).first->second;
  }

  std::size_t refits_performed() const { return refits_; }

  std::vector<std::string> plan_notes() const {
    std::vector<std::string> notes;
    notes.push_back("plan=" + opt_.plan);
    if (opt_.plan == "holdout")
      notes.push_back("train_fraction=" + std::to_string(opt_.train_fraction));
    else if (opt_.plan == "kfold")
      notes.push_back("folds=" + std::to_string(opt_.folds));
    return notes;
  }

 private:
  struct FitPair {
    Dataset train;
    Dataset test;
  };

  RefitEvaluation evaluate_uncached(const std::vector<std::size_t>& kept,
                                    std::uint64_t mask) {
    RefitEvaluation ev;
    double total = 0.0;
    std::size_t scored = 0;
    for (std::size_t f = 0; f < pairs_.size(); ++f) {
      const Dataset& train = pairs_[f].train;
      const Dataset& test = pairs_[f].test;
      const std::uint64_t fit_seed =
          derive_seed(seed_, {seed_domain::refit, mask, f});
      const PredictionModel model = fit_subset(train, kept, fit_seed);
      const std::vector<double> preds =
          kept.empty() ? model.predict(test)
                       : model.predict(test.select_features(kept));
      ++refits_;
      for (std::size_t i = 0; i < test.n(); ++i) {
        const double l = loss_(test.y[i], preds[i]);
        ev.per_instance.push_back(l);
        total += l;
        ++scored;
      }
    }
    ev.risk = total / static_cast<double>(scored);
    return ev;
  }

  PredictionModel fit_subset(const Dataset& train,
                             const std::vector<std::size_t>& kept,
                             std::uint64_t fit_seed) const {
    if (kept.empty()) {
      // No inputs left: the best refit is the optimal constant for the loss
      // (training-label mean works for both squared error and class rates).
      const double c =
          std::accumulate(train.y.begin(), train.y.end(), 0.0) /
          static_cast<double>(train.n());
      return constant_model(c, train.task);
    }
    return fit_learner(learner_, train.select_features(kept), fit_seed,
                       opt_.learner_opts);
  }

  std::string learner_;
  LossFunction loss_;
  std::uint64_t seed_;
  RefitOptions opt_;
  std::vector<FitPair> pairs_;
  std::unordered_map<std::uint64_t, RefitEvaluation> cache_;
  std::size_t refits_ = 0;
};

namespace detail {

inline std::vector<std::size_t> without(std::size_t p,
                                        const std::vector<std::size_t>& drop) {
  std::vector<bool> gone(p, false);
  for (std::size_t j : drop) gone[j] = true;
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < p; ++j)
    if (!gone[j]) kept.push_back(j);
  return kept;
}

inline std::string joined_names(const Dataset& d,
                                const std::vector<std::size_t>& subset) {
  std::string out;
  for (std::size_t j : subset) {
    if (!out.empty()) out += "+";
    out += d.feature_names[j];
  }
  return out;
}

/// Paired risk difference risk(worse) - risk(better) with per-row alignment.
inline FiEstimate paired_difference(std::string name,
                                    const RefitEvaluation& worse,
                                    const RefitEvaluation& better) {
  std::vector<double> diff(worse.per_instance.size());
  for (std::size_t i = 0; i < diff.size(); ++i)
    diff[i] = worse.per_instance[i] - better.per_instance[i];
  return FiEstimate::from_per_instance(std::move(name), std::move(diff));
}

}  // namespace detail

/// Drop-one-group importance: risk(refit without `removed`) - risk(full).
/// The single estimate is named by the removed features joined with '+'.
inline FiResult group_loco(RefitEngine& engine,
                           const std::vector<std::size_t>& removed) {
  require_config(!removed.empty(), "group_loco: removed set must be non-empty");
  const Dataset& d = engine.schema();
  const auto& full = engine.evaluate_keep(detail::without(d.p(), {}));
  const auto& reduced =
      engine.evaluate_keep(detail::without(d.p(), removed));

  FiResult r;
  r.method = "wvim";
  r.loss = engine.loss().name();
  r.learner = engine.learner_name();
  r.notes = engine.plan_notes();
  r.features.push_back(detail::paired_difference(
      detail::joined_names(d, removed), reduced, full));
  return r;
}

/// Leave-one-covariate-out importance for every feature.
inline FiResult loco(RefitEngine& engine) {
  const Dataset& d = engine.schema();
  const auto& full = engine.evaluate_keep(detail::without(d.p(), {}));

  FiResult r;
  r.method = "loco";
  r.loss = engine.loss().name();
  r.learner = engine.learner_name();
  r.notes = engine.plan_notes();
  for (std::size_t j = 0; j < d.p(); ++j) {
    const auto& reduced = engine.evaluate_keep(detail::without(d.p(), {j}));
    r.features.push_back(
        detail::paired_difference(d.feature_names[j], reduced, full));
  }
  return r;
}

/// Add-one-covariate importance against the kept baseline G:
/// risk(refit keeping G) - risk(refit keeping G + {j}) for every j outside G.
inline FiResult swvim(RefitEngine& engine,
                      const std::vector<std::size_t>& given) {
  const Dataset& d = engine.schema();
  std::vector<bool> in_g(d.p(), false);
  for (std::size_t g : given) {
    require_config(g < d.p(), "swvim: baseline feature index out of range");
    in_g[g] = true;
  }
  const auto& base = engine.evaluate_keep(given);

  FiResult r;
  r.method = "swvim";
  r.loss = engine.loss().name();
  r.learner = engine.learner_name();
  for (std::size_t g : given) r.conditioning.push_back(d.feature_names[g]);
  r.notes = engine.plan_notes();
  for (std::size_t j = 0; j < d.p(); ++j) {
    if (in_g[j]) continue;
    std::vector<std::size_t> widened = given;
    widened.push_back(j);
    const auto& with_j = engine.evaluate_keep(widened);
    r.features.push_back(
        detail::paired_difference(d.feature_names[j], base, with_j));
  }
  return r;
}

/// Leave-one-covariate-in: constant baseline vs the univariate refit on j.
inline FiResult loci(RefitEngine& engine) {
  FiResult r = swvim(engine, {});
  r.method = "loci";
  return r;
}

}  // namespace lofi
