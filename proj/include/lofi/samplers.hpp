#pragma once
//
// Replacement-value samplers for perturbation estimators. A sampler produces
// synthetic values for a set of target feature columns of an evaluation
// dataset, either marginally or conditionally on other ("given") columns:
//
//   permutation   shuffle the evaluation rows of the target columns with one
//                 shared permutation (marginal only, preserves within-row
//                 dependence among the targets)
//   gaussian      joint Gaussian fitted to a reference sample, exact
//                 conditional draws per evaluation row
//   knn           pick one of the k nearest reference rows (distance on the
//                 z-scored given columns) and copy its target values
//   oracle        like gaussian, but on analytically known feature moments
//
// Samplers read feature columns only — never the target — and are pure
// functions of (inputs, seed).
//
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lofi/dataset.hpp"
#include "lofi/errors.hpp"
#include "lofi/gaussian.hpp"
#include "lofi/matrix.hpp"
#include "lofi/rng.hpp"
#include "lofi/stats.hpp"

namespace lofi {

inline const std::vector<std::string>& sampler_names() {
  static const std::vector<std::string> names = {"permutation", "gaussian",
                                                 "knn", "oracle"};
  return names;
}

struct SamplerOptions {
  std::size_t knn_k = 30;
};

/// A configured replacement sampler for fixed target/given column sets.
class ConditionalSampler {
 public:
  /// `targets` and `given` index columns of `reference` (and of any
  /// evaluation dataset passed to draw(), which must share its layout).
  /// `analytic` supplies exact feature moments for kind "oracle".
  static ConditionalSampler build(
      const std::string& kind, const Dataset& reference,
      std::vector<std::size_t> targets, std::vector<std::size_t> given,
      const SamplerOptions& opt = {},
      const std::optional<JointGaussian>& analytic = std::nullopt) {
    require_config(!targets.empty(), "sampler: need at least one target column");
    {
      std::vector<bool> seen(reference.p(), false);
      for (std::size_t t : targets) {
        require_config(t < reference.p(), "sampler: target index out of range");
        require_config(!seen[t], "sampler: duplicate column in targets/given");
        seen[t] = true;
      }
      for (std::size_t g : given) {
        require_config(g < reference.p(), "sampler: given index out of range");
        require_config(!seen[g], "sampler: duplicate column in targets/given");
        seen[g] = true;
      }
    }

    ConditionalSampler s;
    s.kind_ = kind;
    s.targets_ = std::move(targets);
    s.given_ = std::move(given);

    if (kind == "permutation") {
      require_config(s.given_.empty(),
                     "permutation sampler is marginal-only; use the gaussian "
                     "or knn sampler to condition on other features");
      auto targets_copy = s.targets_;
      s.draw_ = [targets_copy](const Dataset& eval, std::uint64_t seed) {
        const std::size_t n = eval.n();
        Rng rng(seed);
        const std::vector<std::size_t> perm = rng.permutation(n);
        Matrix out(n, targets_copy.size());
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t c = 0; c < targets_copy.size(); ++c)
            out(i, c) = eval.x(perm[i], targets_copy[c]);
        return out;
      };
      return s;
    }

    if (kind == "gaussian" || kind == "oracle") {
      JointGaussian fg;
      if (kind == "oracle") {
        require_config(analytic.has_value(),
                       "oracle sampler needs analytic feature moments "
                       "(available only for builtin generators)");
        require_config(analytic->dim() == reference.p(),
                       "oracle sampler: moment dimension mismatch");
        fg = *analytic;
      } else {
        // fit only the columns the sampler touches
        std::vector<std::size_t> used = s.targets_;
        used.insert(used.end(), s.given_.begin(), s.given_.end());
        Matrix sub(reference.n(), used.size());
        for (std::size_t i = 0; i < reference.n(); ++i)
          for (std::size_t c = 0; c < used.size(); ++c)
            sub(i, c) = reference.x(i, used[c]);
        const JointGaussian local = JointGaussian::fit(sub);
        // re-inflate to full width so both kinds share the draw path
        fg.mu.assign(reference.p(), 0.0);
        fg.sigma = Matrix(reference.p(), reference.p());
        for (std::size_t a = 0; a < reference.p(); ++a) fg.sigma(a, a) = 1.0;
        for (std::size_t a = 0; a < used.size(); ++a) {
          fg.mu[used[a]] = local.mu[a];
          for (std::size_t b = 0; b < used.size(); ++b)
            fg.sigma(used[a], used[b]) = local.sigma(a, b);
        }
      }
      const ConditionalGaussian cg = condition(fg, s.targets_, s.given_);
      auto given_copy = s.given_;
      auto n_targets = s.targets_.size();
      s.draw_ = [cg, given_copy, n_targets](const Dataset& eval,
                                            std::uint64_t seed) {
        const std::size_t n = eval.n();
        Rng rng(seed);
        Matrix out(n, n_targets);
        Eigen::VectorXd xg(static_cast<Eigen::Index>(given_copy.size()));
        std::vector<double> buf(n_targets);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t c = 0; c < given_copy.size(); ++c)
            xg[static_cast<Eigen::Index>(c)] = eval.x(i, given_copy[c]);
          cg.draw(xg, rng, buf.data());
          for (std::size_t c = 0; c < n_targets; ++c) out(i, c) = buf[c];
        }
        return out;
      };
      return s;
    }

    if (kind == "knn") {
      require_config(opt.knn_k >= 1, "knn sampler: k must be >= 1");
      const std::size_t n_ref = reference.n();
      const std::size_t k = std::min(opt.knn_k, n_ref);
      // donor pool: target values of the reference rows
      Matrix donors(n_ref, s.targets_.size());
      for (std::size_t i = 0; i < n_ref; ++i)
        for (std::size_t c = 0; c < s.targets_.size(); ++c)
          donors(i, c) = reference.x(i, s.targets_[c]);

      if (s.given_.empty()) {
        // marginal: copy the target block of one uniformly drawn donor
        s.draw_ = [donors, n_ref](const Dataset& eval, std::uint64_t seed) {
          const std::size_t n = eval.n();
          Rng rng(seed);
          Matrix out(n, donors.cols);
          for (std::size_t i = 0; i < n; ++i) {
            const auto pick = static_cast<std::size_t>(rng.uniform_index(n_ref));
            for (std::size_t c = 0; c < donors.cols; ++c)
              out(i, c) = donors(pick, c);
          }
          return out;
        };
        return s;
      }

      // z-scale the given columns on the reference sample
      const std::size_t gp = s.given_.size();
      std::vector<double> center(gp), inv_scale(gp);
      for (std::size_t c = 0; c < gp; ++c) {
        const auto col = reference.col(s.given_[c]);
        center[c] = mean(col);
        const double sd = reference.n() >= 2 ? sample_sd(col) : 0.0;
        inv_scale[c] = sd > 1e-12 ? 1.0 / sd : 0.0;
      }
      std::vector<double> ref_scaled(n_ref * gp);
      for (std::size_t i = 0; i < n_ref; ++i)
        for (std::size_t c = 0; c < gp; ++c)
          ref_scaled[i * gp + c] =
              (reference.x(i, s.given_[c]) - center[c]) * inv_scale[c];

      auto given_copy = s.given_;
      s.draw_ = [donors, ref_scaled, center, inv_scale, given_copy, n_ref, gp,
                 k](const Dataset& eval, std::uint64_t seed) {
        const std::size_t n = eval.n();
        Rng rng(seed);
        Matrix out(n, donors.cols);
        std::vector<double> q(gp);
        std::vector<std::pair<double, std::size_t>> dist(n_ref);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t c = 0; c < gp; ++c)
            q[c] = (eval.x(i, given_copy[c]) - center[c]) * inv_scale[c];
          for (std::size_t t = 0; t < n_ref; ++t) {
            double ssum = 0.0;
            const double* r = ref_scaled.data() + t * gp;
            for (std::size_t c = 0; c < gp; ++c) {
              const double dd = q[c] - r[c];
              ssum += dd * dd;
            }
            dist[t] = {ssum, t};
          }
          std::nth_element(dist.begin(),
                           dist.begin() + static_cast<long>(k - 1), dist.end());
          std::sort(dist.begin(), dist.begin() + static_cast<long>(k));
          const std::size_t pick =
              dist[static_cast<std::size_t>(rng.uniform_index(k))].second;
          for (std::size_t c = 0; c < donors.cols; ++c)
            out(i, c) = donors(pick, c);
        }
        return out;
      };
      return s;
    }

    std::string valid;
    for (const auto& nm : sampler_names()) valid += " " + nm;
    throw ConfigError("unknown sampler '" + kind + "'; available:" + valid);
  }

  /// Replacement values, one row per evaluation row, one column per target.
  Matrix draw(const Dataset& eval, std::uint64_t seed) const {
    for (std::size_t t : targets_)
      require_data(t < eval.p(), "sampler: evaluation dataset too narrow");
    return draw_(eval, seed);
  }

  const std::string& kind() const { return kind_; }
  const std::vector<std::size_t>& targets() const { return targets_; }
  const std::vector<std::size_t>& given() const { return given_; }

 private:
  std::string kind_;
  std::vector<std::size_t> targets_;
  std::vector<std::size_t> given_;
  std::function<Matrix(const Dataset&, std::uint64_t)> draw_;
};

/// Applies sampled replacement columns to a copy of the dataset.
inline Dataset apply_replacements(const Dataset& d,
                                  const std::vector<std::size_t>& targets,
                                  const Matrix& values) {
  require_compute(values.rows == d.n() && values.cols == targets.size(),
                  "apply_replacements: shape mismatch");
  Dataset out = d;
  for (std::size_t c = 0; c < targets.size(); ++c)
    for (std::size_t i = 0; i < d.n(); ++i) out.x(i, targets[c]) = values(i, c);
  return out;
}

}  // namespace lofi
