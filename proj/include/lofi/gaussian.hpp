#pragma once
//
// Joint Gaussian utilities: moment fitting and exact conditioning.
//
// condition() precomputes everything needed to describe X_J | X_G = x_g for
// disjoint index sets J, G: the linear mean map, and the Cholesky factor of
// the conditional covariance (Schur complement). A tiny diagonal jitter
// (1e-9 by default) keeps nearly-singular covariances factorizable — e.g.
// exactly duplicated features.
//
#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "lofi/errors.hpp"
#include "lofi/matrix.hpp"
#include "lofi/rng.hpp"

namespace lofi {

struct JointGaussian {
  std::vector<double> mu;  // p means
  Matrix sigma;            // p x p covariance

  std::size_t dim() const { return mu.size(); }

  static JointGaussian from(std::vector<double> mean, Matrix cov) {
    JointGaussian g;
    g.mu = std::move(mean);
    g.sigma = std::move(cov);
    require_compute(g.sigma.rows == g.mu.size() && g.sigma.cols == g.mu.size(),
                    "JointGaussian: covariance shape mismatch");
    return g;
  }

  /// Sample moments of a feature matrix (n-1 denominator).
  static JointGaussian fit(const Matrix& x) {
    require_data(x.rows >= 2, "JointGaussian::fit: need at least 2 rows");
    const std::size_t n = x.rows, p = x.cols;
    JointGaussian g;
    g.mu.assign(p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) g.mu[j] += x(i, j);
    for (std::size_t j = 0; j < p; ++j) g.mu[j] /= static_cast<double>(n);
    g.sigma = Matrix(p, p);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < p; ++a) {
        const double da = x(i, a) - g.mu[a];
        for (std::size_t b = a; b < p; ++b)
          g.sigma(a, b) += da * (x(i, b) - g.mu[b]);
      }
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = a; b < p; ++b) {
        g.sigma(a, b) /= static_cast<double>(n - 1);
        g.sigma(b, a) = g.sigma(a, b);
      }
    return g;
  }
};

/// X_J | X_G = x_g distilled to mean map + conditional covariance factor.
struct ConditionalGaussian {
  std::vector<std::size_t> targets;  // J
  std::vector<std::size_t> given;    // G
  Eigen::MatrixXd coef;              // |J| x |G|:  Sigma_JG Sigma_GG^-1
  Eigen::VectorXd offset;            // mu_J - coef * mu_G
  Eigen::MatrixXd chol_lower;        // L with L L^T = conditional covariance
  Eigen::MatrixXd cond_cov;          // Schur complement itself

  /// Conditional mean given one row of G-values (ordered as `given`).
  Eigen::VectorXd mean_for(const Eigen::VectorXd& xg) const {
    if (given.empty()) return offset;
    return offset + coef * xg;
  }

  /// One joint draw of the target block.
  void draw(const Eigen::VectorXd& xg, Rng& rng, double* out) const {
    Eigen::VectorXd m = mean_for(xg);
    Eigen::VectorXd z(static_cast<Eigen::Index>(targets.size()));
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
    Eigen::VectorXd x = m + chol_lower * z;
    for (Eigen::Index k = 0; k < x.size(); ++k) out[k] = x[k];
  }
};

/// Conditions a joint Gaussian on the coordinates in `given`.
inline ConditionalGaussian condition(const JointGaussian& g,
                                     std::vector<std::size_t> targets,
                                     std::vector<std::size_t> given,
                                     double jitter = 1e-9) {
  const auto tj = static_cast<Eigen::Index>(targets.size());
  const auto gj = static_cast<Eigen::Index>(given.size());
  require_compute(!targets.empty(), "condition: need at least one target");

  Eigen::MatrixXd s_jj(tj, tj), s_jg(tj, gj), s_gg(gj, gj);
  for (Eigen::Index a = 0; a < tj; ++a)
    for (Eigen::Index b = 0; b < tj; ++b)
      s_jj(a, b) = g.sigma(targets[a], targets[b]);
  for (Eigen::Index a = 0; a < tj; ++a)
    for (Eigen::Index b = 0; b < gj; ++b)
      s_jg(a, b) = g.sigma(targets[a], given[b]);
  for (Eigen::Index a = 0; a < gj; ++a)
    for (Eigen::Index b = 0; b < gj; ++b)
      s_gg(a, b) = g.sigma(given[a], given[b]);

  ConditionalGaussian out;
  out.targets = std::move(targets);
  out.given = std::move(given);

  Eigen::VectorXd mu_j(tj), mu_g(gj);
  for (Eigen::Index a = 0; a < tj; ++a) mu_j[a] = g.mu[out.targets[a]];
  for (Eigen::Index a = 0; a < gj; ++a) mu_g[a] = g.mu[out.given[a]];

  Eigen::MatrixXd schur;
  if (gj == 0) {
    out.coef = Eigen::MatrixXd::Zero(tj, 0);
    out.offset = mu_j;
    schur = s_jj;
  } else {
    Eigen::MatrixXd s_gg_j = s_gg + jitter * Eigen::MatrixXd::Identity(gj, gj);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(s_gg_j);
    require_compute(ldlt.info() == Eigen::Success,
                    "conditioning-set covariance is singular even after jitter; "
                    "consider the knn-conditional sampler");
    out.coef = ldlt.solve(s_jg.transpose()).transpose();  // |J| x |G|
    out.offset = mu_j - out.coef * mu_g;
    schur = s_jj - out.coef * s_jg.transpose();
  }
  schur = 0.5 * (schur + schur.transpose()).eval();  // clean up asymmetry
  schur += jitter * Eigen::MatrixXd::Identity(tj, tj);
  // rounding can push tiny conditional variances below zero; clamp via
  // eigen-decomposition only if the plain Cholesky fails
  Eigen::LLT<Eigen::MatrixXd> llt(schur);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(schur);
    require_compute(es.info() == Eigen::Success,
                    "conditional covariance factorization failed; "
                    "consider the knn-conditional sampler");
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(jitter);
    Eigen::MatrixXd fixed =
        es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    llt.compute(fixed);
    require_compute(llt.info() == Eigen::Success,
                    "conditional covariance not positive definite; "
                    "consider the knn-conditional sampler");
    schur = fixed;
  }
  out.cond_cov = schur;
  out.chol_lower = llt.matrixL();
  return out;
}

}  // namespace lofi
