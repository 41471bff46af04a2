#pragma once
//
// Perturbation-family importance: measure how much the test risk of a FIXED
// fitted model rises when one feature column is replaced by synthetic
// values. One engine covers the whole family through its conditioning set G:
//
//   relative_to(G):  importance_j = E[L(y, f(x ; x_j ~ P(X_j | X_G)))] - risk(f)
//   marginal (PFI):  G = {}, permutation sampler
//   full conditional (CFI): G = all other features
//
// Replacement draws are repeated n_reps times on independent substreams; the
// reported per-instance contribution is the rep-averaged loss difference.
//
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lofi/dataset.hpp"
#include "lofi/errors.hpp"
#include "lofi/fi_result.hpp"
#include "lofi/gaussian.hpp"
#include "lofi/loss.hpp"
#include "lofi/model.hpp"
#include "lofi/rng.hpp"
#include "lofi/samplers.hpp"

namespace lofi {

struct PerturbOptions {
  std::size_t n_reps = 5;       // independent replacement draws to average
  std::string sampler;          // "", i.e. auto: permutation when G empty, else gaussian
  SamplerOptions sampler_opts;
  /// Reference sample for fitting conditional samplers; evaluation data is
  /// used when absent. Supply the training split to keep test data clean.
  const Dataset* reference = nullptr;
  /// Analytic feature moments, required by sampler kind "oracle".
  std::optional<JointGaussian> analytic;
};

namespace detail {

inline std::string auto_sampler(const std::vector<std::size_t>& given,
                                const std::string& requested) {
  if (!requested.empty()) return requested;
  return given.empty() ? std::string("permutation") : std::string("gaussian");
}

/// Loss-difference estimate for one feature against conditioning set G.
inline FiEstimate perturb_feature(const PredictionModel& model,
                                  const Dataset& eval, const LossFunction& loss,
                                  const std::vector<double>& base_losses,
                                  std::size_t j,
                                  const std::vector<std::size_t>& given,
                                  std::uint64_t seed,
                                  const PerturbOptions& opt) {
  require_config(opt.n_reps >= 1, "perturbation: n_reps must be >= 1");
  const std::string kind = auto_sampler(given, opt.sampler);
  const Dataset& reference = opt.reference ? *opt.reference : eval;
  const ConditionalSampler sampler = ConditionalSampler::build(
      kind, reference, {j}, given, opt.sampler_opts, opt.analytic);

  const std::size_t n = eval.n();
  std::vector<double> acc(n, 0.0);
  std::vector<double> per_rep(opt.n_reps);
  for (std::size_t r = 0; r < opt.n_reps; ++r) {
    const std::uint64_t rep_seed =
        derive_seed(seed, {seed_domain::perturb, j, r});
    const Matrix draws = sampler.draw(eval, rep_seed);
    const Dataset perturbed = apply_replacements(eval, {j}, draws);
    const std::vector<double> preds = model.predict(perturbed);
    double rep_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = loss(eval.y[i], preds[i]) - base_losses[i];
      acc[i] += diff;
      rep_sum += diff;
    }
    per_rep[r] = rep_sum / static_cast<double>(n);
  }
  for (double& v : acc) v /= static_cast<double>(opt.n_reps);

  FiEstimate e = FiEstimate::from_per_instance(eval.feature_names[j],
                                               std::move(acc));
  e.per_rep = std::move(per_rep);
  return e;
}

inline std::vector<double> base_loss_vector(const PredictionModel& model,
                                            const Dataset& eval,
                                            const LossFunction& loss) {
  const std::vector<double> preds = model.predict(eval);
  std::vector<double> out(eval.n());
  for (std::size_t i = 0; i < eval.n(); ++i)
    out[i] = loss(eval.y[i], preds[i]);
  return out;
}

}  // namespace detail

/// Importance of every feature outside G, conditioning replacements on X_G.
inline FiResult relative_fi(const PredictionModel& model, const Dataset& eval,
                            const LossFunction& loss,
                            const std::vector<std::size_t>& given,
                            std::uint64_t seed, const PerturbOptions& opt = {}) {
  std::vector<bool> in_g(eval.p(), false);
  for (std::size_t g : given) {
    require_config(g < eval.p(), "relative_fi: conditioning index out of range");
    in_g[g] = true;
  }
  const auto base = detail::base_loss_vector(model, eval, loss);

  FiResult r;
  r.method = "rfi";
  r.loss = loss.name();
  r.learner = model.algorithm;
  for (std::size_t g : given) r.conditioning.push_back(eval.feature_names[g]);
  r.notes.push_back("sampler=" + detail::auto_sampler(given, opt.sampler));
  r.notes.push_back("n_reps=" + std::to_string(opt.n_reps));
  for (std::size_t j = 0; j < eval.p(); ++j) {
    if (in_g[j]) continue;
    r.features.push_back(
        detail::perturb_feature(model, eval, loss, base, j, given, seed, opt));
  }
  return r;
}

/// Marginal permutation importance: resample each feature unconditionally.
inline FiResult pfi(const PredictionModel& model, const Dataset& eval,
                    const LossFunction& loss, std::uint64_t seed,
                    const PerturbOptions& opt = {}) {
  FiResult r = relative_fi(model, eval, loss, {}, seed, opt);
  r.method = "pfi";
  return r;
}

/// Conditional importance: resample each feature given all the others.
inline FiResult cfi(const PredictionModel& model, const Dataset& eval,
                    const LossFunction& loss, std::uint64_t seed,
                    const PerturbOptions& opt = {}) {
  const auto base = detail::base_loss_vector(model, eval, loss);
  PerturbOptions o = opt;
  if (o.sampler.empty()) o.sampler = "gaussian";

  FiResult r;
  r.method = "cfi";
  r.loss = loss.name();
  r.learner = model.algorithm;
  r.notes.push_back("sampler=" + o.sampler);
  r.notes.push_back("n_reps=" + std::to_string(o.n_reps));
  for (std::size_t j = 0; j < eval.p(); ++j) {
    std::vector<std::size_t> given;
    for (std::size_t k = 0; k < eval.p(); ++k)
      if (k != j) given.push_back(k);
    r.features.push_back(
        detail::perturb_feature(model, eval, loss, base, j, given, seed, o));
  }
  return r;
}

}  // namespace lofi
