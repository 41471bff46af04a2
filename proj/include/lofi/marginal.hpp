#pragma once
//
// Marginalization-family importance. A fitted model is reduced to a feature
// subset S by integrating the complement out of its prediction function:
//
//   marginal route      f_S(x_s) = mean_d f(x_s, c_d),  c_d ~ P(X_C)
//   conditional route   f_S(x_s) = mean_d f(x_s, c_d),  c_d ~ P(X_C | X_S = x_s)
//   closed-form route   f_S supplied directly (builtin generators)
//
// The value of a subset is the test-risk improvement of its reduced model
// over the empty model, v(S) = risk(f_empty) - risk(f_S), with v({}) = 0 by
// construction. On top of v sit the single-feature value functions, their
// conditional-increment variant, and Shapley attribution (exact subset
// enumeration for small p, permutation sampling with a convergence stop for
// larger p).
//
#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
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

inline std::uint64_t subset_mask(const std::vector<std::size_t>& subset) {
  std::uint64_t m = 0;
  for (std::size_t j : subset) {
    require_config(j < 63, "subset_mask: feature index too large");
    m |= std::uint64_t{1} << j;
  }
  return m;
}

inline std::vector<std::size_t> mask_subset(std::uint64_t mask) {
  std::vector<std::size_t> s;
  for (std::size_t j = 0; mask; ++j, mask >>= 1)
    if (mask & 1) s.push_back(j);
  return s;
}

/// Supplies (and caches) one prediction model per feature subset.
class SubsetModelProvider {
 public:
  virtual ~SubsetModelProvider() = default;

  const PredictionModel& model_for(const std::vector<std::size_t>& subset) {
    const std::uint64_t mask = subset_mask(subset);
    auto it = cache_.find(mask);
    if (it == cache_.end())
      it = cache_.emplace(mask, build(subset)).first;
    return it->second;
  }

  virtual std::size_t feature_count() const = 0;
  virtual std::string learner_name() const = 0;
  virtual std::string route() const = 0;

 protected:
  virtual PredictionModel build(const std::vector<std::size_t>& subset) = 0;

 private:
  std::unordered_map<std::uint64_t, PredictionModel> cache_;
};

namespace detail {

/// Mean prediction of the base model on the reference sample — the natural
/// empty-subset reduction of a fitted model.
inline double mean_reference_prediction(const PredictionModel& base,
                                        const Dataset& reference) {
  const auto preds = base.predict(reference);
  return mean(preds);
}

class MarginalMcProvider final : public SubsetModelProvider {
 public:
  MarginalMcProvider(PredictionModel base, const Dataset& reference,
                     std::size_t mc_draws, std::uint64_t seed)
      : base_(std::move(base)),
        reference_(reference),
        mc_draws_(mc_draws),
        seed_(seed) {
    require_config(mc_draws_ >= 1, "marginal reduction: mc_draws must be >= 1");
    require_config(base_.features == reference.feature_names,
                   "marginal reduction: model/reference feature mismatch");
  }

  std::size_t feature_count() const override { return reference_.p(); }
  std::string learner_name() const override { return base_.algorithm; }
  std::string route() const override { return "mc-marginal"; }

 protected:
  PredictionModel build(const std::vector<std::size_t>& subset) override {
    const std::size_t p = reference_.p();
    if (subset.size() == p) return base_;
    if (subset.empty())
      return constant_model(mean_reference_prediction(base_, reference_),
                            base_.task);

    std::vector<std::size_t> comp;
    {
      std::vector<bool> in_s(p, false);
      for (std::size_t j : subset) in_s[j] = true;
      for (std::size_t j = 0; j < p; ++j)
        if (!in_s[j]) comp.push_back(j);
    }
    // one shared bank of completion rows, drawn once per subset
    const std::uint64_t mask = subset_mask(subset);
    Rng rng(derive_seed(seed_, {seed_domain::reduce, mask}));
    Matrix completions(mc_draws_, comp.size());
    for (std::size_t d = 0; d < mc_draws_; ++d) {
      const auto row =
          static_cast<std::size_t>(rng.uniform_index(reference_.n()));
      for (std::size_t c = 0; c < comp.size(); ++c)
        completions(d, c) = reference_.x(row, comp[c]);
    }

    std::vector<std::string> names;
    for (std::size_t j : subset) names.push_back(reference_.feature_names[j]);

    PredictionModel m;
    m.algorithm = base_.algorithm;
    m.features = names;
    m.task = base_.task;
    auto base = base_;
    auto s = subset;
    auto c = comp;
    auto bank = completions;
    const std::size_t draws = mc_draws_;
    m.predict_block = [base, s, c, bank, draws, p](
                          const double* x, std::size_t n, std::size_t stride) {
      std::vector<double> full(n * draws * p);
      for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x + i * stride;
        for (std::size_t d = 0; d < draws; ++d) {
          double* row = full.data() + (i * draws + d) * p;
          for (std::size_t a = 0; a < s.size(); ++a) row[s[a]] = xi[a];
          for (std::size_t a = 0; a < c.size(); ++a) row[c[a]] = bank(d, a);
        }
      }
      const auto preds = base.predict_block(full.data(), n * draws, p);
      std::vector<double> out(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t d = 0; d < draws; ++d) sum += preds[i * draws + d];
        out[i] = sum / static_cast<double>(draws);
      }
      return out;
    };
    return m;
  }

 private:
  PredictionModel base_;
  Dataset reference_;
  std::size_t mc_draws_;
  std::uint64_t seed_;
};

class ConditionalMcProvider final : public SubsetModelProvider {
 public:
  ConditionalMcProvider(PredictionModel base, const Dataset& reference,
                        std::string sampler_kind, std::size_t mc_draws,
                        SamplerOptions sampler_opts,
                        std::optional<JointGaussian> analytic,
                        std::uint64_t seed)
      : base_(std::move(base)),
        reference_(reference),
        sampler_kind_(std::move(sampler_kind)),
        mc_draws_(mc_draws),
        sampler_opts_(sampler_opts),
        analytic_(std::move(analytic)),
        seed_(seed) {
    require_config(mc_draws_ >= 1,
                   "conditional reduction: mc_draws must be >= 1");
    require_config(sampler_kind_ != "permutation",
                   "conditional reduction needs a conditional sampler "
                   "(gaussian, knn, or oracle)");
    require_config(base_.features == reference.feature_names,
                   "conditional reduction: model/reference feature mismatch");
  }

  std::size_t feature_count() const override { return reference_.p(); }
  std::string learner_name() const override { return base_.algorithm; }
  std::string route() const override { return "mc-conditional-" + sampler_kind_; }

 protected:
  PredictionModel build(const std::vector<std::size_t>& subset) override {
    const std::size_t p = reference_.p();
    if (subset.size() == p) return base_;
    if (subset.empty())
      return constant_model(mean_reference_prediction(base_, reference_),
                            base_.task);

    std::vector<std::size_t> comp;
    {
      std::vector<bool> in_s(p, false);
      for (std::size_t j : subset) in_s[j] = true;
      for (std::size_t j = 0; j < p; ++j)
        if (!in_s[j]) comp.push_back(j);
    }
    const ConditionalSampler sampler = ConditionalSampler::build(
        sampler_kind_, reference_, comp, subset, sampler_opts_, analytic_);

    std::vector<std::string> names;
    for (std::size_t j : subset) names.push_back(reference_.feature_names[j]);

    PredictionModel m;
    m.algorithm = base_.algorithm;
    m.features = names;
    m.task = base_.task;
    auto base = base_;
    auto s = subset;
    auto c = comp;
    auto ref_names = reference_.feature_names;
    auto task = base_.task;
    const std::size_t draws = mc_draws_;
    const std::uint64_t mask = subset_mask(subset);
    const std::uint64_t seed = seed_;
    m.predict_block = [base, s, c, sampler, ref_names, task, draws, mask, seed,
                       p](const double* x, std::size_t n, std::size_t stride) {
      // rebuild a full-width dataset so the sampler can read the given
      // columns; complement columns hold zeros and are never read
      Matrix wide(n, p);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < s.size(); ++a)
          wide(i, s[a]) = x[i * stride + a];
      const Dataset shell(ref_names, std::move(wide),
                          std::vector<double>(n, 0.0), task);

      std::vector<double> out(n, 0.0);
      std::vector<double> full(n * p);
      for (std::size_t d = 0; d < draws; ++d) {
        const Matrix comp_draw =
            sampler.draw(shell, derive_seed(seed, {seed_domain::reduce, mask, d}));
        for (std::size_t i = 0; i < n; ++i) {
          double* row = full.data() + i * p;
          const double* xi = x + i * stride;
          for (std::size_t a = 0; a < s.size(); ++a) row[s[a]] = xi[a];
          for (std::size_t a = 0; a < c.size(); ++a) row[c[a]] = comp_draw(i, a);
        }
        const auto preds = base.predict_block(full.data(), n, p);
        for (std::size_t i = 0; i < n; ++i) out[i] += preds[i];
      }
      for (double& v : out) v /= static_cast<double>(draws);
      return out;
    };
    return m;
  }

 private:
  PredictionModel base_;
  Dataset reference_;
  std::string sampler_kind_;
  std::size_t mc_draws_;
  SamplerOptions sampler_opts_;
  std::optional<JointGaussian> analytic_;
  std::uint64_t seed_;
};

class ClosedFormProvider final : public SubsetModelProvider {
 public:
  ClosedFormProvider(
      std::function<PredictionModel(const std::vector<std::size_t>&)> fn,
      std::size_t p, std::string learner = "oracle")
      : fn_(std::move(fn)), p_(p), learner_(std::move(learner)) {}

  std::size_t feature_count() const override { return p_; }
  std::string learner_name() const override { return learner_; }
  std::string route() const override { return "closed-form"; }

 protected:
  PredictionModel build(const std::vector<std::size_t>& subset) override {
    return fn_(subset);
  }

 private:
  std::function<PredictionModel(const std::vector<std::size_t>&)> fn_;
  std::size_t p_;
  std::string learner_;
};

}  // namespace detail

inline std::unique_ptr<SubsetModelProvider> make_marginal_provider(
    PredictionModel base, const Dataset& reference, std::size_t mc_draws = 50,
    std::uint64_t seed = 1) {
  return std::make_unique<detail::MarginalMcProvider>(std::move(base),
                                                      reference, mc_draws, seed);
}

inline std::unique_ptr<SubsetModelProvider> make_conditional_provider(
    PredictionModel base, const Dataset& reference,
    std::string sampler_kind = "gaussian", std::size_t mc_draws = 50,
    SamplerOptions sampler_opts = {},
    std::optional<JointGaussian> analytic = std::nullopt,
    std::uint64_t seed = 1) {
  return std::make_unique<detail::ConditionalMcProvider>(
      std::move(base), reference, std::move(sampler_kind), mc_draws,
      sampler_opts, std::move(analytic), seed);
}

/// Closed-form subset models, e.g. a builtin generator's oracle family.
inline std::unique_ptr<SubsetModelProvider> make_closed_form_provider(
    std::function<PredictionModel(const std::vector<std::size_t>&)> fn,
    std::size_t p, std::string learner = "oracle") {
  return std::make_unique<detail::ClosedFormProvider>(std::move(fn), p,
                                                      std::move(learner));
}

/// Evaluates v(S) = risk(f_empty) - risk(f_S) on a fixed evaluation set,
/// caching scalar values by subset mask. v({}) is exactly 0.
class ValueFunctionCache {
 public:
  ValueFunctionCache(SubsetModelProvider& provider, const Dataset& eval,
                     LossFunction loss)
      : provider_(provider), eval_(eval), loss_(loss) {
    require_config(eval_.p() == provider_.feature_count(),
                   "value functions: evaluation width does not match the "
                   "subset-model provider");
  }

  struct Evaluation {
    double value = 0.0;
    std::vector<double> per_instance;  // mean equals value
  };

  /// Fresh per-instance vector (the scalar is cached for reuse).
  Evaluation evaluate(std::uint64_t mask) {
    Evaluation ev;
    if (mask == 0) {
      ev.per_instance.assign(eval_.n(), 0.0);
      return ev;
    }
    const auto& empty_losses = empty_model_losses();
    const PredictionModel& m = provider_.model_for(mask_subset(mask));
    const auto preds = m.predict(eval_);
    ev.per_instance.resize(eval_.n());
    double sum = 0.0;
    for (std::size_t i = 0; i < eval_.n(); ++i) {
      ev.per_instance[i] = empty_losses[i] - loss_(eval_.y[i], preds[i]);
      sum += ev.per_instance[i];
    }
    ev.value = sum / static_cast<double>(eval_.n());
    values_[mask] = ev.value;
    return ev;
  }

  double value(std::uint64_t mask) {
    if (mask == 0) return 0.0;
    auto it = values_.find(mask);
    if (it != values_.end()) return it->second;
    return evaluate(mask).value;
  }

  std::size_t distinct_evaluations() const { return values_.size(); }
  const Dataset& eval_data() const { return eval_; }
  SubsetModelProvider& provider() { return provider_; }
  const LossFunction& loss() const { return loss_; }

 private:
  const std::vector<double>& empty_model_losses() {
    if (empty_losses_.empty()) {
      const PredictionModel& m0 = provider_.model_for({});
      const auto preds = m0.predict(eval_);
      empty_losses_.resize(eval_.n());
      for (std::size_t i = 0; i < eval_.n(); ++i)
        empty_losses_[i] = loss_(eval_.y[i], preds[i]);
    }
    return empty_losses_;
  }

  SubsetModelProvider& provider_;
  Dataset eval_;
  LossFunction loss_;
  std::unordered_map<std::uint64_t, double> values_;
  std::vector<double> empty_losses_;
};

namespace detail {

inline FiResult result_shell(ValueFunctionCache& cache, std::string method) {
  FiResult r;
  r.method = std::move(method);
  r.loss = cache.loss().name();
  r.learner = cache.provider().learner_name();
  r.notes.push_back("route=" + cache.provider().route());
  return r;
}

}  // namespace detail

/// v({j}) for every feature: the risk improvement a single feature brings
/// over the empty model. Method name reflects the reduction route.
inline FiResult single_feature_value_functions(ValueFunctionCache& cache,
                                               const std::string& method) {
  FiResult r = detail::result_shell(cache, method);
  const auto& names = cache.eval_data().feature_names;
  for (std::size_t j = 0; j < names.size(); ++j) {
    auto ev = cache.evaluate(std::uint64_t{1} << j);
    r.features.push_back(
        FiEstimate::from_per_instance(names[j], std::move(ev.per_instance)));
  }
  return r;
}

/// v(P) - v(P \ {j}) for every feature: the value lost when one feature is
/// marginalized out of the otherwise complete reduction. Equivalent to
/// conditional_value_increments with G = all other features, but computed
/// with a single shared full-subset evaluation.
inline FiResult rest_conditional_increments(ValueFunctionCache& cache,
                                            const std::string& method = "scsagevf") {
  FiResult r = detail::result_shell(cache, method);
  r.notes.push_back("conditioning=rest");
  const auto& names = cache.eval_data().feature_names;
  require_config(names.size() < 64, "value functions: too many features");
  const std::uint64_t full = (std::uint64_t{1} << names.size()) - 1;
  const auto base = cache.evaluate(full);
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto without = cache.evaluate(full & ~(std::uint64_t{1} << j));
    std::vector<double> diff(base.per_instance.size());
    for (std::size_t i = 0; i < diff.size(); ++i)
      diff[i] = base.per_instance[i] - without.per_instance[i];
    r.features.push_back(
        FiEstimate::from_per_instance(names[j], std::move(diff)));
  }
  return r;
}

/// v(G u {j}) - v(G) for every j outside G, on the conditional route.
inline FiResult conditional_value_increments(
    ValueFunctionCache& cache, const std::vector<std::size_t>& given,
    const std::string& method = "scsagevf") {
  FiResult r = detail::result_shell(cache, method);
  const auto& names = cache.eval_data().feature_names;
  const std::uint64_t gmask = subset_mask(given);
  for (std::size_t g : given) r.conditioning.push_back(names[g]);
  const auto base = cache.evaluate(gmask);
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (gmask & (std::uint64_t{1} << j)) continue;
    const auto with = cache.evaluate(gmask | (std::uint64_t{1} << j));
    std::vector<double> diff(with.per_instance.size());
    for (std::size_t i = 0; i < diff.size(); ++i)
      diff[i] = with.per_instance[i] - base.per_instance[i];
    r.features.push_back(
        FiEstimate::from_per_instance(names[j], std::move(diff)));
  }
  return r;
}

struct SageOptions {
  std::size_t exact_limit = 12;       // enumerate subsets up to this p
  std::size_t max_iters = 500;        // permutation-sampling cap
  std::size_t min_iters = 20;
  double convergence_ratio = 0.025;   // stop when max se / max |phi| drops below
};

/// Exact Shapley attribution of v over all 2^p subsets. Also streams
/// per-instance contributions, so standard errors are instance-level.
inline FiResult sage_exact(ValueFunctionCache& cache) {
  const auto& names = cache.eval_data().feature_names;
  const std::size_t p = names.size();
  require_config(p <= 20, "sage_exact: too many features to enumerate");
  const std::size_t n = cache.eval_data().n();

  // weight of a coalition of size s (not counting j): s!(p-1-s)!/p!
  std::vector<double> weight(p);
  {
    std::vector<double> fact(p + 1, 1.0);
    for (std::size_t i = 1; i <= p; ++i)
      fact[i] = fact[i - 1] * static_cast<double>(i);
    for (std::size_t s = 0; s < p; ++s)
      weight[s] = fact[s] * fact[p - 1 - s] / fact[p];
  }

  // The with-j and without-j sums are accumulated separately and subtracted
  // at the end: a feature whose models never change then sees bit-identical
  // partial sums on both sides, so its attribution is exactly zero instead
  // of rounding dust.
  std::vector<std::vector<double>> plus(p, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> minus(p, std::vector<double>(n, 0.0));
  const std::uint64_t total = std::uint64_t{1} << p;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    const auto ev = cache.evaluate(mask);
    const auto size = static_cast<std::size_t>(__builtin_popcountll(mask));
    for (std::size_t j = 0; j < p; ++j) {
      const bool has_j = mask & (std::uint64_t{1} << j);
      // S containing j contributes +w_{|S|-1} v(S); S without j, -w_{|S|} v(S)
      auto& acc = has_j ? plus[j] : minus[j];
      const double w = has_j ? weight[size - 1] : weight[size];
      for (std::size_t i = 0; i < n; ++i) acc[i] += w * ev.per_instance[i];
    }
  }

  FiResult r = detail::result_shell(cache, "sage");
  r.notes.push_back("attribution=exact");
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) plus[j][i] -= minus[j][i];
    r.features.push_back(
        FiEstimate::from_per_instance(names[j], std::move(plus[j])));
  }
  return r;
}

/// Permutation-sampled Shapley attribution with a relative-precision stop.
/// Standard errors are across sampled permutations.
inline FiResult sage_sampled(ValueFunctionCache& cache, std::uint64_t seed,
                             const SageOptions& opt = {}) {
  const auto& names = cache.eval_data().feature_names;
  const std::size_t p = names.size();
  require_config(opt.min_iters >= 2 && opt.max_iters >= opt.min_iters,
                 "sage_sampled: need max_iters >= min_iters >= 2");

  std::vector<RunningMoments> phi(p);
  std::size_t iters = 0;
  bool converged = false;
  for (std::size_t t = 0; t < opt.max_iters; ++t) {
    Rng rng(derive_seed(seed, {seed_domain::sage, t}));
    const auto perm = rng.permutation(p);
    std::uint64_t mask = 0;
    double prev = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      mask |= std::uint64_t{1} << perm[k];
      const double cur = cache.value(mask);
      phi[perm[k]].add(cur - prev);
      prev = cur;
    }
    iters = t + 1;
    if (iters >= opt.min_iters) {
      double max_se = 0.0, max_abs = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        max_se = std::max(max_se, phi[j].std_error());
        max_abs = std::max(max_abs, std::abs(phi[j].mean));
      }
      if (max_se <= opt.convergence_ratio * std::max(max_abs, 1e-12)) {
        converged = true;
        break;
      }
    }
  }

  FiResult r = detail::result_shell(cache, "sage");
  r.notes.push_back("attribution=sampled");
  r.notes.push_back("iterations=" + std::to_string(iters));
  r.notes.push_back(converged ? "converged=yes" : "converged=no");
  for (std::size_t j = 0; j < p; ++j) {
    FiEstimate e;
    e.feature = names[j];
    e.importance = phi[j].mean;
    e.std_error = phi[j].std_error();
    r.features.push_back(std::move(e));
  }
  return r;
}

/// Shapley attribution: exact when p is small enough, sampled otherwise.
inline FiResult sage_values(ValueFunctionCache& cache, std::uint64_t seed,
                            const SageOptions& opt = {}) {
  const std::size_t p = cache.eval_data().p();
  if (p <= opt.exact_limit) return sage_exact(cache);
  return sage_sampled(cache, seed, opt);
}

}  // namespace lofi
