#pragma once
//
// Learner registry: small, dependency-free supervised fitters sharing one
// entry point, fit_learner(). Every learner consumes a Dataset and returns a
// PredictionModel; regression models emit conditional-mean estimates and
// classification models emit P(Y = 1).
//
//   constant          target mean, ignores features
//   ols               least squares on [1, x]
//   ols_interactions  least squares on [1, x, all pairwise products]
//   knn               k-nearest-neighbour mean on z-scored features
//   bagged_trees      bootstrap-aggregated greedy regression trees
//   logistic          ridge-stabilized IRLS logistic regression
//
// Deterministic given (dataset, seed): the only stochastic learner is
// bagged_trees, whose bootstraps are substreams of the seed.
//
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "lofi/dataset.hpp"
#include "lofi/errors.hpp"
#include "lofi/model.hpp"
#include "lofi/stats.hpp"
#include "lofi/trees.hpp"

namespace lofi {

struct LearnerOptions {
  std::size_t knn_k = 10;
  std::size_t n_trees = 100;
  std::size_t tree_max_depth = 30;
  std::size_t tree_min_leaf = 5;
  double ridge_lambda = 1e-6;       // fallback strength for collinear designs
  std::size_t logistic_max_iter = 50;
  double logistic_ridge = 1e-6;
};

inline const std::vector<std::string>& learner_names() {
  static const std::vector<std::string> names = {
      "constant", "ols", "ols_interactions", "knn", "bagged_trees", "logistic"};
  return names;
}

namespace detail {

inline std::size_t design_width(std::size_t p, bool interactions) {
  return 1 + p + (interactions ? p * (p - 1) / 2 : 0);
}

inline void fill_design_row(const double* x, std::size_t p, bool interactions,
                            double* out) {
  out[0] = 1.0;
  for (std::size_t j = 0; j < p; ++j) out[1 + j] = x[j];
  if (interactions) {
    std::size_t at = 1 + p;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t k = i + 1; k < p; ++k) out[at++] = x[i] * x[k];
  }
}

inline Eigen::MatrixXd design_matrix(const Dataset& d, bool interactions) {
  const std::size_t n = d.n(), p = d.p();
  const std::size_t w = design_width(p, interactions);
  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(w));
  std::vector<double> row(w);
  for (std::size_t i = 0; i < n; ++i) {
    fill_design_row(d.x.row_ptr(i), p, interactions, row.data());
    for (std::size_t c = 0; c < w; ++c)
      z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
  }
  return z;
}

inline PredictionModel fit_ols(const Dataset& d, bool interactions,
                               const LearnerOptions& opt) {
  require_config(d.task == Task::regression,
                 "ols expects a regression target; use logistic for "
                 "binary classification");
  const std::size_t p = d.p();
  const std::size_t w = design_width(p, interactions);
  require_data(d.n() >= 2, "ols: need at least 2 rows");
  Eigen::MatrixXd z = design_matrix(d, interactions);
  Eigen::VectorXd yv(static_cast<Eigen::Index>(d.n()));
  for (std::size_t i = 0; i < d.n(); ++i)
    yv[static_cast<Eigen::Index>(i)] = d.y[i];

  std::vector<std::string> notes;
  Eigen::VectorXd beta;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  if (qr.rank() == static_cast<Eigen::Index>(w)) {
    beta = qr.solve(yv);
  } else {
    // collinear design: fall back to a faint ridge on the non-intercept
    // coefficients, which spreads weight evenly across duplicates
    Eigen::MatrixXd gram = z.transpose() * z;
    for (Eigen::Index c = 1; c < static_cast<Eigen::Index>(w); ++c)
      gram(c, c) += opt.ridge_lambda;
    beta = gram.ldlt().solve(z.transpose() * yv);
    notes.push_back("ridge_fallback: collinear design, lambda=" +
                    std::to_string(opt.ridge_lambda));
  }

  std::vector<double> coef(beta.data(), beta.data() + beta.size());
  PredictionModel m;
  m.algorithm = interactions ? "ols_interactions" : "ols";
  m.features = d.feature_names;
  m.task = d.task;
  m.notes = std::move(notes);
  m.predict_block = [coef, p, interactions](const double* x, std::size_t n,
                                            std::size_t stride) {
    std::vector<double> out(n);
    std::vector<double> row(coef.size());
    for (std::size_t i = 0; i < n; ++i) {
      fill_design_row(x + i * stride, p, interactions, row.data());
      double s = 0.0;
      for (std::size_t c = 0; c < coef.size(); ++c) s += coef[c] * row[c];
      out[i] = s;
    }
    return out;
  };
  return m;
}

inline PredictionModel fit_knn(const Dataset& d, const LearnerOptions& opt) {
  require_config(opt.knn_k >= 1, "knn: k must be >= 1");
  const std::size_t n = d.n(), p = d.p();
  const std::size_t k = std::min(opt.knn_k, n);

  // z-score features on the training sample; constant columns are ignored
  std::vector<double> center(p), inv_scale(p);
  for (std::size_t j = 0; j < p; ++j) {
    const auto cj = d.col(j);
    center[j] = mean(cj);
    const double sd = n >= 2 ? sample_sd(cj) : 0.0;
    inv_scale[j] = sd > 1e-12 ? 1.0 / sd : 0.0;
  }
  std::vector<double> scaled(n * p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j)
      scaled[i * p + j] = (d.x(i, j) - center[j]) * inv_scale[j];
  std::vector<double> targets = d.y;

  PredictionModel m;
  m.algorithm = "knn";
  m.features = d.feature_names;
  m.task = d.task;
  m.predict_block = [scaled = std::move(scaled), targets = std::move(targets),
                     center, inv_scale, n, p,
                     k](const double* x, std::size_t rows, std::size_t stride) {
    std::vector<double> out(rows);
    std::vector<double> q(p);
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < rows; ++i) {
      const double* xi = x + i * stride;
      for (std::size_t j = 0; j < p; ++j)
        q[j] = (xi[j] - center[j]) * inv_scale[j];
      for (std::size_t t = 0; t < n; ++t) {
        double s = 0.0;
        const double* r = scaled.data() + t * p;
        for (std::size_t j = 0; j < p; ++j) {
          const double dly = q[j] - r[j];
          s += dly * dly;
        }
        dist[t] = {s, t};
      }
      std::nth_element(dist.begin(), dist.begin() + static_cast<long>(k - 1),
                       dist.end());  // pair ordering breaks ties by row index
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += targets[dist[t].second];
      out[i] = s / static_cast<double>(k);
    }
    return out;
  };
  return m;
}

inline PredictionModel fit_logistic(const Dataset& d, const LearnerOptions& opt) {
  require_config(d.task == Task::binary_classification,
                 "logistic expects a binary classification target");
  const std::size_t n = d.n(), p = d.p();
  const auto w = static_cast<Eigen::Index>(p + 1);
  Eigen::MatrixXd z = design_matrix(d, /*interactions=*/false);
  Eigen::VectorXd yv(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    yv[static_cast<Eigen::Index>(i)] = d.y[i];

  const double lambda = opt.logistic_ridge;
  auto penalized_deviance = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta =
        (z * beta).cwiseMax(-35.0).cwiseMin(35.0);
    double dev = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double pr = 1.0 / (1.0 + std::exp(-eta[i]));
      const double pc = std::clamp(yv[i] == 1.0 ? pr : 1.0 - pr, 1e-12, 1.0);
      dev -= std::log(pc);
    }
    return dev + 0.5 * lambda * beta.squaredNorm();
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(w);
  double dev = penalized_deviance(beta);
  std::vector<std::string> notes;
  bool converged = false;
  for (std::size_t it = 0; it < opt.logistic_max_iter; ++it) {
    const Eigen::VectorXd eta = (z * beta).cwiseMax(-35.0).cwiseMin(35.0);
    Eigen::VectorXd pr(eta.size()), wt(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      pr[i] = 1.0 / (1.0 + std::exp(-eta[i]));
      wt[i] = std::max(pr[i] * (1.0 - pr[i]), 1e-10);
    }
    const Eigen::VectorXd grad = z.transpose() * (yv - pr) - lambda * beta;
    Eigen::MatrixXd hess = z.transpose() * wt.asDiagonal() * z +
                           lambda * Eigen::MatrixXd::Identity(w, w);
    Eigen::VectorXd step = hess.ldlt().solve(grad);
    // backtracking keeps the penalized deviance monotone
    double scale = 1.0;
    double new_dev = dev;
    Eigen::VectorXd cand = beta;
    for (int half = 0; half < 30; ++half) {
      cand = beta + scale * step;
      new_dev = penalized_deviance(cand);
      if (new_dev <= dev + 1e-12) break;
      scale *= 0.5;
    }
    const double delta = (cand - beta).lpNorm<Eigen::Infinity>();
    beta = cand;
    dev = new_dev;
    if (delta < 1e-9) {
      converged = true;
      break;
    }
  }
  if (!converged)
    notes.push_back("max_iterations: coefficients may still be growing "
                    "(separable data saturates)");

  std::vector<double> coef(beta.data(), beta.data() + beta.size());
  PredictionModel m;
  m.algorithm = "logistic";
  m.features = d.feature_names;
  m.task = d.task;
  m.notes = std::move(notes);
  m.predict_block = [coef, p](const double* x, std::size_t rows,
                              std::size_t stride) {
    std::vector<double> out(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      const double* xi = x + i * stride;
      double eta = coef[0];
      for (std::size_t j = 0; j < p; ++j) eta += coef[1 + j] * xi[j];
      eta = std::clamp(eta, -35.0, 35.0);
      out[i] = 1.0 / (1.0 + std::exp(-eta));
    }
    return out;
  };
  return m;
}

}  // namespace detail

/// Fit `algorithm` on `train`. The seed only matters for stochastic
/// learners; deterministic ones ignore it.
inline PredictionModel fit_learner(const std::string& algorithm,
                                   const Dataset& train, std::uint64_t seed,
                                   const LearnerOptions& opt = {}) {
  if (algorithm == "constant") {
    return constant_model(mean(train.y), train.task);
  }
  if (algorithm == "ols") return detail::fit_ols(train, false, opt);
  if (algorithm == "ols_interactions") return detail::fit_ols(train, true, opt);
  if (algorithm == "knn") return detail::fit_knn(train, opt);
  if (algorithm == "bagged_trees") {
    return BaggedTrees::fit(train, seed, opt.n_trees, opt.tree_max_depth,
                            opt.tree_min_leaf)
        .as_model();
  }
  if (algorithm == "logistic") return detail::fit_logistic(train, opt);
  std::string valid;
  for (const auto& n : learner_names()) valid += " " + n;
  throw ConfigError("unknown learner '" + algorithm + "'; available:" + valid);
}

}  // namespace lofi
