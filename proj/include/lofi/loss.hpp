#pragma once
//
// Loss functions and risk estimation.
//
// Losses are pointwise: squared error for regression, cross-entropy for
// binary classification. Cross-entropy clamps predicted probabilities to
// [eps_clip, 1 - eps_clip] so that a confidently wrong prediction costs
// -ln(eps_clip) (~27.6 at the default 1e-12) instead of infinity; estimates
// stay finite and comparable.
//
// estimate_risk returns the mean loss together with its standard error and
// the full per-instance loss vector — downstream inference (paired tests,
// value-function differences) is built on those per-instance values.
//
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lofi/dataset.hpp"
#include "lofi/errors.hpp"
#include "lofi/model.hpp"
#include "lofi/stats.hpp"

namespace lofi {

enum class LossKind { l2, ce };

struct LossFunction {
  LossKind kind = LossKind::l2;
  double eps_clip = 1e-12;

  static LossFunction l2() { return {LossKind::l2, 1e-12}; }
  static LossFunction ce(double eps = 1e-12) { return {LossKind::ce, eps}; }

  static LossFunction parse(const std::string& name) {
    if (name == "l2") return l2();
    if (name == "ce") return ce();
    throw ConfigError("unknown loss '" + name + "' (expected 'l2' or 'ce')");
  }

  const char* name() const { return kind == LossKind::l2 ? "l2" : "ce"; }

  double operator()(double y, double pred) const {
    if (kind == LossKind::l2) {
      const double d = y - pred;
      return d * d;
    }
    require_compute(y == 0.0 || y == 1.0,
                    "cross-entropy requires 0/1 targets");
    // clamp the probability assigned to the true class; avoids the
    // 1 - (1 - eps) cancellation for confident wrong predictions on y = 0
    double p = y == 1.0 ? pred : 1.0 - pred;
    if (p < eps_clip) p = eps_clip;
    if (p > 1.0) p = 1.0;
    return -std::log(p);
  }
};

struct RiskEstimate {
  double mean_loss = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  std::vector<double> per_instance;  // always retained for paired inference
};

/// Risk of a fixed prediction vector against a dataset's target.
inline RiskEstimate risk_of_predictions(const std::vector<double>& preds,
                                        const Dataset& d, const LossFunction& loss) {
  require_compute(preds.size() == d.n(),
                  "prediction count does not match dataset rows");
  RiskEstimate r;
  r.n = d.n();
  r.per_instance.resize(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) {
    require_compute(std::isfinite(preds[i]),
                    "non-finite prediction at row " + std::to_string(i + 1));
    r.per_instance[i] = loss(d.y[i], preds[i]);
  }
  r.mean_loss = mean(r.per_instance);
  r.std_error = std_error_of_mean(r.per_instance);
  return r;
}

/// Expected loss of a fitted model on held-out data.
inline RiskEstimate estimate_risk(const PredictionModel& model, const Dataset& d,
                                  const LossFunction& loss) {
  return risk_of_predictions(model.predict(d), d, loss);
}

}  // namespace lofi
