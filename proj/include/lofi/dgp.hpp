#pragma once
//
// Synthetic data generators with known structure. Each generator carries:
//   * a seeded sampler producing a Dataset,
//   * exact conditional-expectation ("oracle") models for every feature
//     subset, optimal for squared loss — and for cross-entropy in the
//     binary case, where the oracle outputs the true class probability,
//   * the analytic risk of the full-feature oracle (Bayes risk),
//   * an exact conditional-independence query, answered by d-separation
//     with determinism closure on the structural graph, or by an explicit
//     override for generators not faithful to any DAG.
//
// Feature j maps to graph node j; the target is node p.
//
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lofi/dag.hpp"
#include "lofi/dataset.hpp"
#include "lofi/errors.hpp"
#include "lofi/gaussian.hpp"
#include "lofi/loss.hpp"
#include "lofi/model.hpp"
#include "lofi/rng.hpp"

namespace lofi {

/// y = intercept + beta.x + sum_{i<k} gamma[i][k] x_i x_k + noise_sd * eps
struct PolynomialTarget {
  double intercept = 0.0;
  std::vector<double> beta;                 // length p
  std::vector<std::vector<double>> gamma;   // p x p, upper triangle used
  double noise_sd = 0.0;

  static PolynomialTarget linear(std::vector<double> betas, double sd) {
    PolynomialTarget t;
    t.beta = std::move(betas);
    t.gamma.assign(t.beta.size(), std::vector<double>(t.beta.size(), 0.0));
    t.noise_sd = sd;
    return t;
  }

  double systematic(const double* x) const {
    double v = intercept;
    const std::size_t p = beta.size();
    for (std::size_t i = 0; i < p; ++i) v += beta[i] * x[i];
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t k = i + 1; k < p; ++k)
        if (gamma[i][k] != 0.0) v += gamma[i][k] * x[i] * x[k];
    return v;
  }
};

namespace detail {

/// E[Y | X_S = x_s] for Gaussian features and a polynomial target.
/// Uses the conditional moments of the unobserved block: for i,k outside S,
/// E[X_i X_k | x_s] = m_i m_k + V_ik.
inline PredictionModel gaussian_polynomial_oracle(
    const JointGaussian& fg, const PolynomialTarget& target,
    const std::vector<std::size_t>& subset,
    const std::vector<std::string>& feature_names, Task task) {
  const std::size_t p = fg.dim();
  std::vector<std::size_t> comp;  // unobserved features
  {
    std::vector<bool> in_s(p, false);
    for (std::size_t j : subset) in_s[j] = true;
    for (std::size_t j = 0; j < p; ++j)
      if (!in_s[j]) comp.push_back(j);
  }
  std::vector<std::string> names;
  names.reserve(subset.size());
  for (std::size_t j : subset) names.push_back(feature_names[j]);

  if (comp.empty()) {
    auto t = target;
    return make_row_model("oracle", names, task,
                          [t](const double* x) { return t.systematic(x); });
  }

  std::optional<ConditionalGaussian> cond;
  if (!subset.empty()) cond = condition(fg, comp, subset);

  auto t = target;
  auto s = subset;
  auto c = comp;
  auto mu = fg.mu;
  Matrix sig = fg.sigma;
  auto predict_one = [t, s, c, cond, mu, sig, p](const double* xs) {
    std::vector<double> m(p, 0.0);
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p),
                                              static_cast<Eigen::Index>(p));
    for (std::size_t a = 0; a < s.size(); ++a) m[s[a]] = xs[a];
    if (cond) {
      Eigen::VectorXd xg(static_cast<Eigen::Index>(s.size()));
      for (std::size_t a = 0; a < s.size(); ++a)
        xg[static_cast<Eigen::Index>(a)] = xs[a];
      Eigen::VectorXd cm = cond->mean_for(xg);
      for (std::size_t a = 0; a < c.size(); ++a) {
        m[c[a]] = cm[static_cast<Eigen::Index>(a)];
        for (std::size_t b = 0; b < c.size(); ++b)
          v(static_cast<Eigen::Index>(c[a]), static_cast<Eigen::Index>(c[b])) =
              cond->cond_cov(static_cast<Eigen::Index>(a),
                             static_cast<Eigen::Index>(b));
      }
    } else {  // nothing observed: plain moments
      for (std::size_t a = 0; a < c.size(); ++a) {
        m[c[a]] = mu[c[a]];
        for (std::size_t b = 0; b < c.size(); ++b)
          v(static_cast<Eigen::Index>(c[a]), static_cast<Eigen::Index>(c[b])) =
              sig(c[a], c[b]);
      }
    }
    double out = t.intercept;
    for (std::size_t i = 0; i < p; ++i) out += t.beta[i] * m[i];
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t k = i + 1; k < p; ++k)
        if (t.gamma[i][k] != 0.0)
          out += t.gamma[i][k] *
                 (m[i] * m[k] + v(static_cast<Eigen::Index>(i),
                                  static_cast<Eigen::Index>(k)));
    return out;
  };

  PredictionModel model;
  model.algorithm = "oracle";
  model.features = names;
  model.task = task;
  const std::size_t width = s.size();
  model.predict_block = [predict_one, width](const double* x, std::size_t n,
                                             std::size_t stride) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = predict_one(x + i * stride);
    (void)width;
    return out;
  };
  return model;
}

}  // namespace detail

/// A fully specified synthetic generator.
struct DgpSpec {
  std::string name;
  std::size_t p = 0;
  Task task = Task::regression;
  std::vector<std::string> feature_names;

  /// Draws n i.i.d. rows. Row r uses its own substream of `seed`, so the
  /// result is invariant to generation order.
  std::function<Dataset(std::size_t, std::uint64_t)> sample;

  /// Conditional-expectation model on feature subset S (sorted indices).
  std::function<PredictionModel(const std::vector<std::size_t>&)> oracle;

  LossKind canonical_loss = LossKind::l2;
  double bayes_risk = 0.0;    // risk of oracle(all features), canonical loss
  double target_mean = 0.0;   // optimal empty-subset prediction

  Dag graph;  // features 0..p-1, target node p
  /// Non-null only for generators whose independencies a DAG cannot encode.
  std::function<bool(std::size_t, const std::vector<std::size_t>&,
                     const std::vector<std::size_t>&)>
      indep_override;

  /// Joint law of the features when it is Gaussian (used by samplers and
  /// oracle-backed conditioning); absent otherwise.
  std::optional<JointGaussian> feature_gaussian;

  // ---- exact conditional-independence queries ------------------------

  bool independent(std::size_t a, const std::vector<std::size_t>& bs,
                   const std::vector<std::size_t>& obs) const {
    if (indep_override) return indep_override(a, bs, obs);
    return graph.independent(a, bs, obs);
  }

  /// X_j dependent on Y given X_G?
  bool dep_target_given(std::size_t j, const std::vector<std::size_t>& g) const {
    return !independent(j, {p}, g);
  }

  bool dep_target_marginal(std::size_t j) const {
    return dep_target_given(j, {});
  }

  bool dep_target_given_rest(std::size_t j) const {
    return dep_target_given(j, others(j));
  }

  /// Does any conditioning set G (subset of the other features) make X_j and
  /// Y dependent?
  bool exists_dependence_set(std::size_t j) const {
    const auto rest = others(j);
    require_config(rest.size() <= 20, "exists_dependence_set: p too large");
    const std::size_t total = std::size_t{1} << rest.size();
    for (std::size_t mask = 0; mask < total; ++mask) {
      std::vector<std::size_t> g;
      for (std::size_t b = 0; b < rest.size(); ++b)
        if (mask & (std::size_t{1} << b)) g.push_back(rest[b]);
      if (dep_target_given(j, g)) return true;
    }
    return false;
  }

  /// X_j independent of all other features?
  bool features_independent(std::size_t j) const {
    return independent(j, others(j), {});
  }

  /// X_j independent of all other features given Y?
  bool features_independent_given_target(std::size_t j) const {
    return independent(j, others(j), {p});
  }

  /// X_j independent of the remainder R = P \ (G u {j}) given X_G?
  bool remainder_independent(std::size_t j,
                             const std::vector<std::size_t>& g) const {
    return independent(j, remainder(j, g), g);
  }

  /// Same, but additionally conditioning on Y.
  bool remainder_independent_given_target(
      std::size_t j, const std::vector<std::size_t>& g) const {
    auto obs = g;
    obs.push_back(p);
    return independent(j, remainder(j, g), obs);
  }

  std::vector<std::size_t> others(std::size_t j) const {
    std::vector<std::size_t> r;
    for (std::size_t k = 0; k < p; ++k)
      if (k != j) r.push_back(k);
    return r;
  }

  std::vector<std::size_t> remainder(std::size_t j,
                                     const std::vector<std::size_t>& g) const {
    std::vector<bool> drop(p, false);
    drop[j] = true;
    for (std::size_t k : g) {
      require_config(k < p && k != j, "remainder: bad conditioning index");
      drop[k] = true;
    }
    std::vector<std::size_t> r;
    for (std::size_t k = 0; k < p; ++k)
      if (!drop[k]) r.push_back(k);
    return r;
  }
};

/// Exact association table for one feature against the target: marginally,
/// given all other features, and given every subset of the other features.
struct AssociationFlags {
  std::string feature;
  bool marginal = false;    // dependent on the target unconditionally
  bool given_rest = false;  // dependent given all other features
  /// Dependence flag per conditioning subset of the other features (sorted
  /// indices), enumerated exhaustively in mask order.
  std::vector<std::pair<std::vector<std::size_t>, bool>> given;
};

/// Ground-truth association flags for every feature of a generator. The
/// per-subset table is exponential in p, so enumeration is capped.
inline std::vector<AssociationFlags> ground_truth_flags(const DgpSpec& d) {
  require_config(d.p <= 16,
                 "ground_truth_flags: subset enumeration needs p <= 16");
  std::vector<AssociationFlags> table;
  table.reserve(d.p);
  for (std::size_t j = 0; j < d.p; ++j) {
    AssociationFlags f;
    f.feature = d.feature_names[j];
    f.marginal = d.dep_target_marginal(j);
    f.given_rest = d.dep_target_given_rest(j);
    const auto rest = d.others(j);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << rest.size());
         ++mask) {
      std::vector<std::size_t> g;
      for (std::size_t k = 0; k < rest.size(); ++k)
        if (mask & (std::uint64_t{1} << k)) g.push_back(rest[k]);
      const bool dep = d.dep_target_given(j, g);
      f.given.emplace_back(std::move(g), dep);
    }
    table.push_back(std::move(f));
  }
  return table;
}

namespace detail {

inline std::vector<std::string> default_names(std::size_t p) {
  std::vector<std::string> names(p);
  for (std::size_t j = 0; j < p; ++j) names[j] = "x" + std::to_string(j + 1);
  return names;
}

/// Row-substreamed sampler: `fill(rng, x_row, y)` draws one observation.
template <typename Fill>
std::function<Dataset(std::size_t, std::uint64_t)> make_sampler(
    std::vector<std::string> names, Task task, Fill fill) {
  return [names, task, fill](std::size_t n, std::uint64_t seed) {
    require_config(n >= 1, "sample: n must be >= 1");
    const std::size_t p = names.size();
    Matrix x(n, p);
    std::vector<double> y(n);
    std::vector<double> row(p);
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(derive_seed(seed, {seed_domain::dgp, i}));
      fill(rng, row.data(), y[i]);
      for (std::size_t j = 0; j < p; ++j) x(i, j) = row[j];
    }
    return Dataset(names, std::move(x), std::move(y), task);
  };
}

}  // namespace detail

/// Independent standard-normal features, y = beta.x + noise_sd * eps.
inline DgpSpec make_linear_gaussian(std::vector<double> betas, double noise_sd,
                                    std::string name = "linear_gaussian") {
  const std::size_t p = betas.size();
  require_config(p >= 1, "make_linear_gaussian: need at least one feature");
  DgpSpec d;
  d.name = std::move(name);
  d.p = p;
  d.task = Task::regression;
  d.feature_names = detail::default_names(p);
  d.canonical_loss = LossKind::l2;
  d.bayes_risk = noise_sd * noise_sd;
  d.target_mean = 0.0;

  d.graph = Dag(p + 1);
  for (std::size_t j = 0; j < p; ++j)
    if (betas[j] != 0.0) d.graph.add_edge(j, p);

  d.feature_gaussian = JointGaussian::from(
      std::vector<double>(p, 0.0), [&] {
        Matrix s(p, p);
        for (std::size_t j = 0; j < p; ++j) s(j, j) = 1.0;
        return s;
      }());

  PolynomialTarget target = PolynomialTarget::linear(betas, noise_sd);
  d.sample = detail::make_sampler(
      d.feature_names, d.task,
      [target, p](Rng& rng, double* x, double& y) {
        for (std::size_t j = 0; j < p; ++j) x[j] = rng.normal();
        y = target.systematic(x) + target.noise_sd * rng.normal();
      });

  auto fg = *d.feature_gaussian;
  auto names = d.feature_names;
  auto task = d.task;
  d.oracle = [fg, target, names, task](const std::vector<std::size_t>& s) {
    return detail::gaussian_polynomial_oracle(fg, target, s, names, task);
  };
  return d;
}

namespace detail {

inline DgpSpec build_dgp_a() {
  DgpSpec d;
  d.name = "dgp_a";
  d.p = 2;
  d.task = Task::regression;
  d.feature_names = default_names(2);
  d.canonical_loss = LossKind::l2;
  d.bayes_risk = 1.0;  // y is pure noise
  d.target_mean = 0.0;

  d.graph = Dag(3);
  d.graph.add_edge(0, 1);                // x2 := x1
  d.graph.add_determinism({0}, 1);
  d.graph.add_determinism({1}, 0);       // the copy is invertible

  d.feature_gaussian = JointGaussian::from({0.0, 0.0}, [] {
    Matrix s(2, 2);
    s(0, 0) = 1.0; s(0, 1) = 1.0;
    s(1, 0) = 1.0; s(1, 1) = 1.0;
    return s;
  }());

  PolynomialTarget target = PolynomialTarget::linear({0.0, 0.0}, 1.0);
  d.sample = make_sampler(d.feature_names, d.task,
                          [](Rng& rng, double* x, double& y) {
                            x[0] = rng.normal();
                            x[1] = x[0];
                            y = rng.normal();
                          });
  auto fg = *d.feature_gaussian;
  auto names = d.feature_names;
  d.oracle = [fg, target, names](const std::vector<std::size_t>& s) {
    return gaussian_polynomial_oracle(fg, target, s, names, Task::regression);
  };
  return d;
}

inline DgpSpec build_dgp_b() {
  DgpSpec d;
  d.name = "dgp_b";
  d.p = 2;
  d.task = Task::binary_classification;
  d.feature_names = default_names(2);
  d.canonical_loss = LossKind::ce;
  d.bayes_risk = 0.0;  // the true class probability is always 0 or 1
  d.target_mean = 0.5;

  // Parity is not faithful to any DAG over {x1, x2, y}: every pair is
  // marginally independent, yet each variable is a function of the other
  // two. Answer queries directly.
  d.graph = Dag(3);
  d.indep_override = [](std::size_t a, const std::vector<std::size_t>& bs,
                        const std::vector<std::size_t>& obs) {
    (void)a;
    if (bs.empty()) return true;
    return obs.empty() && bs.size() == 1;
  };

  d.sample = make_sampler(d.feature_names, d.task,
                          [](Rng& rng, double* x, double& y) {
                            x[0] = rng.uniform() < 0.5 ? 1.0 : 0.0;
                            x[1] = rng.uniform() < 0.5 ? 1.0 : 0.0;
                            y = (x[0] != x[1]) ? 1.0 : 0.0;
                          });

  auto names = d.feature_names;
  d.oracle = [names](const std::vector<std::size_t>& s) {
    // P(y=1 | x_s): parity of both bits when both are seen, 1/2 otherwise.
    if (s.size() == 2) {
      return make_row_model("oracle", names, Task::binary_classification,
                            [](const double* x) {
                              return (x[0] != x[1]) ? 1.0 : 0.0;
                            });
    }
    std::vector<std::string> kept;
    for (std::size_t j : s) kept.push_back(names[j]);
    return make_row_model("oracle", kept, Task::binary_classification,
                          [](const double*) { return 0.5; });
  };
  return d;
}

inline DgpSpec build_dgp_c() {
  DgpSpec d;
  d.name = "dgp_c";
  d.p = 2;
  d.task = Task::regression;
  d.feature_names = default_names(2);
  d.canonical_loss = LossKind::l2;
  d.bayes_risk = 0.0;  // y := x1 exactly
  d.target_mean = 0.0;

  d.graph = Dag(3);
  d.graph.add_edge(0, 1);           // x2 := x1 + 0.1 eps
  d.graph.add_edge(0, 2);           // y := x1
  d.graph.add_determinism({0}, 2);
  d.graph.add_determinism({2}, 0);  // y = x1 is invertible

  d.feature_gaussian = JointGaussian::from({0.0, 0.0}, [] {
    Matrix s(2, 2);
    s(0, 0) = 1.0;  s(0, 1) = 1.0;
    s(1, 0) = 1.0;  s(1, 1) = 1.01;
    return s;
  }());

  PolynomialTarget target = PolynomialTarget::linear({1.0, 0.0}, 0.0);
  d.sample = make_sampler(d.feature_names, d.task,
                          [](Rng& rng, double* x, double& y) {
                            x[0] = rng.normal();
                            x[1] = x[0] + 0.1 * rng.normal();
                            y = x[0];
                          });
  auto fg = *d.feature_gaussian;
  auto names = d.feature_names;
  d.oracle = [fg, target, names](const std::vector<std::size_t>& s) {
    return gaussian_polynomial_oracle(fg, target, s, names, Task::regression);
  };
  return d;
}

inline DgpSpec build_dgp_d() {
  DgpSpec d;
  d.name = "dgp_d";
  d.p = 5;
  d.task = Task::regression;
  d.feature_names = default_names(5);
  d.canonical_loss = LossKind::l2;
  d.bayes_risk = 0.01;  // noise sd 0.1
  d.target_mean = 0.0;

  d.graph = Dag(6);
  d.graph.add_edge(0, 1);  // x2 := x1 + 0.001 eps
  d.graph.add_edge(2, 3);  // x4 := x3 + 0.1 eps
  d.graph.add_edge(3, 5);  // y depends on x4 ...
  d.graph.add_edge(4, 5);  // ... and x5

  d.feature_gaussian = JointGaussian::from(
      std::vector<double>(5, 0.0), [] {
        Matrix s(5, 5);
        s(0, 0) = 1.0;       s(0, 1) = 1.0;
        s(1, 0) = 1.0;       s(1, 1) = 1.0 + 1e-6;
        s(2, 2) = 1.0;       s(2, 3) = 1.0;
        s(3, 2) = 1.0;       s(3, 3) = 1.01;
        s(4, 4) = 1.0;
        return s;
      }());

  PolynomialTarget target =
      PolynomialTarget::linear({0.0, 0.0, 0.0, 1.0, 1.0}, 0.1);
  target.gamma[3][4] = 1.0;  // x4 * x5 interaction
  d.sample = make_sampler(d.feature_names, d.task,
                          [](Rng& rng, double* x, double& y) {
                            x[0] = rng.normal();
                            x[1] = x[0] + 0.001 * rng.normal();
                            x[2] = rng.normal();
                            x[3] = x[2] + 0.1 * rng.normal();
                            x[4] = rng.normal();
                            y = x[3] + x[4] + x[3] * x[4] + 0.1 * rng.normal();
                          });
  auto fg = *d.feature_gaussian;
  auto names = d.feature_names;
  d.oracle = [fg, target, names](const std::vector<std::size_t>& s) {
    return gaussian_polynomial_oracle(fg, target, s, names, Task::regression);
  };
  return d;
}

inline DgpSpec build_dgp_e() {
  DgpSpec d;
  d.name = "dgp_e";
  d.p = 2;
  d.task = Task::regression;
  d.feature_names = default_names(2);
  d.canonical_loss = LossKind::l2;
  d.bayes_risk = 1.0;  // E[Var(y|x)] = E[x1^2] = 1
  d.target_mean = 0.0;

  d.graph = Dag(3);
  d.graph.add_edge(0, 2);  // x1 drives the conditional variance
  d.graph.add_edge(1, 2);  // x2 drives the conditional mean

  d.feature_gaussian = JointGaussian::from({0.0, 0.0}, [] {
    Matrix s(2, 2);
    s(0, 0) = 1.0;
    s(1, 1) = 1.0;
    return s;
  }());

  d.sample = make_sampler(d.feature_names, d.task,
                          [](Rng& rng, double* x, double& y) {
                            x[0] = rng.normal();
                            x[1] = rng.normal();
                            y = x[1] + std::abs(x[0]) * rng.normal();
                          });

  auto names = d.feature_names;
  d.oracle = [names](const std::vector<std::size_t>& s) {
    // E[y | x_s] = x2 when x2 is observed, 0 otherwise.
    bool has_x2 = false;
    std::size_t pos = 0;
    std::vector<std::string> kept;
    for (std::size_t a = 0; a < s.size(); ++a) {
      kept.push_back(names[s[a]]);
      if (s[a] == 1) { has_x2 = true; pos = a; }
    }
    if (has_x2)
      return make_row_model("oracle", kept, Task::regression,
                            [pos](const double* x) { return x[pos]; });
    return make_row_model("oracle", kept, Task::regression,
                          [](const double*) { return 0.0; });
  };
  return d;
}

inline DgpSpec build_dgp_f() {
  DgpSpec d;
  d.name = "dgp_f";
  d.p = 2;
  d.task = Task::regression;
  d.feature_names = default_names(2);
  d.canonical_loss = LossKind::l2;
  d.bayes_risk = 1.0;
  d.target_mean = 0.0;

  d.graph = Dag(3);  // fully disconnected

  d.feature_gaussian = JointGaussian::from({0.0, 0.0}, [] {
    Matrix s(2, 2);
    s(0, 0) = 1.0;
    s(1, 1) = 1.0;
    return s;
  }());

  PolynomialTarget target = PolynomialTarget::linear({0.0, 0.0}, 1.0);
  d.sample = make_sampler(d.feature_names, d.task,
                          [](Rng& rng, double* x, double& y) {
                            x[0] = rng.normal();
                            x[1] = rng.normal();
                            y = rng.normal();
                          });
  auto fg = *d.feature_gaussian;
  auto names = d.feature_names;
  d.oracle = [fg, target, names](const std::vector<std::size_t>& s) {
    return gaussian_polynomial_oracle(fg, target, s, names, Task::regression);
  };
  return d;
}

inline DgpSpec build_dgp_g() {
  DgpSpec d = make_linear_gaussian({1.0, 2.0}, 1.0, "dgp_g");
  return d;
}

}  // namespace detail

inline const std::vector<std::string>& builtin_dgp_names() {
  static const std::vector<std::string> names = {
      "dgp_a", "dgp_b", "dgp_c", "dgp_d", "dgp_e", "dgp_f", "dgp_g"};
  return names;
}

inline DgpSpec builtin_dgp(const std::string& name) {
  if (name == "dgp_a") return detail::build_dgp_a();
  if (name == "dgp_b") return detail::build_dgp_b();
  if (name == "dgp_c") return detail::build_dgp_c();
  if (name == "dgp_d") return detail::build_dgp_d();
  if (name == "dgp_e") return detail::build_dgp_e();
  if (name == "dgp_f") return detail::build_dgp_f();
  if (name == "dgp_g") return detail::build_dgp_g();
  std::string valid;
  for (const auto& n : builtin_dgp_names()) valid += " " + n;
  throw ConfigError("unknown generator '" + name + "'; available:" + valid);
}

}  // namespace lofi
