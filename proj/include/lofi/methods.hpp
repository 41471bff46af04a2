#pragma once
//
// Unified estimator dispatch: a MethodSpec names one feature-importance
// procedure (estimator family + learner + loss + conditioning + sampler
// settings) and make_fi_computer turns it into a (train, test, seed)
// callable. The resampling-based inference procedures and the command-line
// front end both run estimators exclusively through this surface.
//
//   perturbation     pfi, cfi, rfi        fixed model, replaced columns
//   marginalization  msagevf, csagevf,    fixed model, reduced via
//                    scsagevf,            integrating features out
//                    msage, csage         Shapley attributions of the above
//   refitting        loco, wvim, swvim,   learner retrained per subset
//                    loci
//
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lofi/dataset.hpp"
#include "lofi/errors.hpp"
#include "lofi/gaussian.hpp"
#include "lofi/inference.hpp"
#include "lofi/learners.hpp"
#include "lofi/loss.hpp"
#include "lofi/marginal.hpp"
#include "lofi/perturb.hpp"
#include "lofi/refit.hpp"
#include "lofi/rng.hpp"
#include "lofi/samplers.hpp"

namespace lofi {

inline const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {
      "pfi",  "cfi",   "rfi",      "msagevf", "csagevf", "scsagevf",
      "msage", "csage", "loco",    "wvim",    "swvim",   "loci"};
  return names;
}

struct MethodSpec {
  std::string method = "pfi";
  std::string learner = "ols";
  LossFunction loss = LossFunction::l2();
  /// Conditioning features: the relative-to set G for rfi / swvim /
  /// scsagevf, or the removed group for wvim. Ignored elsewhere.
  std::vector<std::size_t> conditioning;
  /// Conditional sampler ("gaussian", "knn", "oracle"); empty = default.
  std::string sampler;
  std::size_t n_reps = 5;     // perturbation replacement draws
  std::size_t mc_draws = 50;  // reduced-model completion draws
  SageOptions sage;
  LearnerOptions learner_opts;
  SamplerOptions sampler_opts;
  RefitOptions refit_opts;      // plan settings for kfold-style refit runs
  std::optional<JointGaussian> analytic;  // for the oracle sampler
};

namespace detail {

enum class MethodFamily { perturbation, marginalization, refitting };

inline MethodFamily family_of(const std::string& method) {
  if (method == "pfi" || method == "cfi" || method == "rfi")
    return MethodFamily::perturbation;
  if (method == "msagevf" || method == "csagevf" || method == "scsagevf" ||
      method == "msage" || method == "csage")
    return MethodFamily::marginalization;
  if (method == "loco" || method == "wvim" || method == "swvim" ||
      method == "loci")
    return MethodFamily::refitting;
  std::string known;
  for (const auto& m : method_names()) known += (known.empty() ? "" : ", ") + m;
  throw ConfigError("unknown method '" + method + "' (known: " + known + ")");
}

inline FiResult run_perturbation(const MethodSpec& spec, const Dataset& train,
                                 const Dataset& test, std::uint64_t seed) {
  const PredictionModel model = fit_learner(
      spec.learner, train, derive_seed(seed, {seed_domain::learner}),
      spec.learner_opts);
  PerturbOptions opt;
  opt.n_reps = spec.n_reps;
  opt.sampler = spec.sampler;
  opt.sampler_opts = spec.sampler_opts;
  opt.reference = &train;
  opt.analytic = spec.analytic;
  if (spec.method == "pfi") return pfi(model, test, spec.loss, seed, opt);
  if (spec.method == "cfi") return cfi(model, test, spec.loss, seed, opt);
  return relative_fi(model, test, spec.loss, spec.conditioning, seed, opt);
}

inline FiResult run_marginalization(const MethodSpec& spec,
                                    const Dataset& train, const Dataset& test,
                                    std::uint64_t seed) {
  const PredictionModel model = fit_learner(
      spec.learner, train, derive_seed(seed, {seed_domain::learner}),
      spec.learner_opts);
  const bool marginal = spec.method == "msagevf" || spec.method == "msage";
  std::unique_ptr<SubsetModelProvider> provider;
  if (marginal) {
    provider = make_marginal_provider(model, train, spec.mc_draws, seed);
  } else {
    provider = make_conditional_provider(
        model, train, spec.sampler.empty() ? "gaussian" : spec.sampler,
        spec.mc_draws, spec.sampler_opts, spec.analytic, seed);
  }
  ValueFunctionCache cache(*provider, test, spec.loss);
  if (spec.method == "msagevf" || spec.method == "csagevf")
    return single_feature_value_functions(cache, spec.method);
  if (spec.method == "scsagevf")
    return conditional_value_increments(cache, spec.conditioning, "scsagevf");
  FiResult r = sage_values(cache, seed, spec.sage);
  r.method = spec.method;
  return r;
}

inline FiResult run_refitting(const MethodSpec& spec, const Dataset& train,
                              const Dataset& test, std::uint64_t seed) {
  RefitOptions opt = spec.refit_opts;
  opt.learner_opts = spec.learner_opts;
  RefitEngine engine(train, test, spec.learner, spec.loss, seed, opt);
  if (spec.method == "loco") return loco(engine);
  if (spec.method == "loci") return loci(engine);
  if (spec.method == "swvim") return swvim(engine, spec.conditioning);
  return group_loco(engine, spec.conditioning);
}

}  // namespace detail

/// Bind a method specification into the (train, test, seed) shape consumed
/// by the resampling-based inference procedures.
inline FiComputer make_fi_computer(MethodSpec spec) {
  (void)detail::family_of(spec.method);  // validate eagerly
  return [spec = std::move(spec)](const Dataset& train, const Dataset& test,
                                  std::uint64_t seed) -> FiResult {
    switch (detail::family_of(spec.method)) {
      case detail::MethodFamily::perturbation:
        return detail::run_perturbation(spec, train, test, seed);
      case detail::MethodFamily::marginalization:
        return detail::run_marginalization(spec, train, test, seed);
      case detail::MethodFamily::refitting:
      default:
        return detail::run_refitting(spec, train, test, seed);
    }
  };
}

/// One-shot convenience: split the data once, run the method on the pair.
inline FiResult run_fi_method(const MethodSpec& spec, const Dataset& data,
                              std::uint64_t seed, double train_fraction = 0.7) {
  const Split s = split(data.n(), train_fraction, seed);
  return make_fi_computer(spec)(data.subset_rows(s.train),
                                data.subset_rows(s.test), seed);
}

}  // namespace lofi
