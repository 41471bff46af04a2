#pragma once
//
// Common result containers for all feature-importance estimators. Every
// estimator reports, per feature: the point estimate, a standard error of
// the mean per-instance contribution, and the raw per-instance vector so
// paired tests can run downstream without re-evaluating models.
//
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lofi/stats.hpp"

namespace lofi {

struct FiEstimate {
  std::string feature;
  double importance = 0.0;
  double std_error = 0.0;
  std::vector<double> per_instance;  // instance-level contributions (mean = importance)
  std::vector<double> per_rep;       // estimate per sampler replication, if any
  std::optional<double> ci_low;      // set by the inference layer
  std::optional<double> ci_high;
  std::optional<double> p_value;

  static FiEstimate from_per_instance(std::string name,
                                      std::vector<double> contributions) {
    FiEstimate e;
    e.feature = std::move(name);
    e.importance = mean(contributions);
    e.std_error = std_error_of_mean(contributions);
    e.per_instance = std::move(contributions);
    return e;
  }
};

struct FiResult {
  std::string method;                 // e.g. "pfi", "cfi", "rfi", "sage"
  std::string loss;                   // loss name the importances refer to
  std::string learner;                // algorithm of the evaluated model
  std::vector<std::string> conditioning;  // names of conditioned-on features
  std::vector<std::string> notes;
  std::vector<FiEstimate> features;

  const FiEstimate* find(const std::string& name) const {
    for (const auto& f : features)
      if (f.feature == name) return &f;
    return nullptr;
  }
};

}  // namespace lofi
