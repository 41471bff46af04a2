#pragma once
//
// Fitted prediction model. A model remembers the ordered list of feature
// names it was fit on and evaluates only those columns; prediction is a pure
// batch function over a packed row-major block, so estimators can assemble
// synthetic inputs (perturbed or marginalized completions) without touching
// Dataset plumbing. Regression models emit real values; classification
// models emit P(Y = 1).
//
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "lofi/dataset.hpp"
#include "lofi/errors.hpp"

namespace lofi {

struct PredictionModel {
  std::string algorithm;                  // e.g. "ols", "bagged-trees", "oracle"
  std::vector<std::string> features;      // inputs, in fit order
  Task task = Task::regression;
  std::vector<std::string> notes;         // fit diagnostics (fallbacks, non-convergence)

  /// x: row-major block of shape (n, stride) whose first features.size()
  /// entries per row are the model's inputs in fit order.
  std::function<std::vector<double>(const double* x, std::size_t n, std::size_t stride)>
      predict_block;

  bool has_note(const std::string& key) const {
    for (const auto& s : notes)
      if (s.find(key) != std::string::npos) return true;
    return false;
  }

  /// Evaluate on a dataset, resolving the model's features by name.
  std::vector<double> predict(const Dataset& d) const {
    require_compute(static_cast<bool>(predict_block), "model has no prediction function");
    // fast path: dataset columns already match the model's inputs in order
    if (d.feature_names.size() == features.size()) {
      bool same = true;
      for (std::size_t j = 0; j < features.size(); ++j)
        if (d.feature_names[j] != features[j]) {
          same = false;
          break;
        }
      if (same) return predict_block(d.x.data.data(), d.n(), d.p());
    }
    std::vector<std::size_t> idx(features.size());
    for (std::size_t j = 0; j < features.size(); ++j) {
      auto k = d.feature_index(features[j]);
      require_data(k.has_value(), "model input '" + features[j] +
                                      "' not present in dataset");
      idx[j] = *k;
    }
    std::vector<double> packed(d.n() * features.size());
    for (std::size_t i = 0; i < d.n(); ++i)
      for (std::size_t j = 0; j < features.size(); ++j)
        packed[i * features.size() + j] = d.x(i, idx[j]);
    return predict_block(packed.data(), d.n(), features.size());
  }
};

/// Model that predicts the same value everywhere (ignores all features).
inline PredictionModel constant_model(double value, Task task) {
  PredictionModel m;
  m.algorithm = "constant";
  m.task = task;
  m.predict_block = [value](const double*, std::size_t n, std::size_t) {
    return std::vector<double>(n, value);
  };
  return m;
}

/// Wrap a plain row function f(row pointer) over the given features.
inline PredictionModel make_row_model(std::string algorithm,
                                      std::vector<std::string> features, Task task,
                                      std::function<double(const double*)> f) {
  PredictionModel m;
  m.algorithm = std::move(algorithm);
  m.features = std::move(features);
  m.task = task;
  m.predict_block = [f = std::move(f)](const double* x, std::size_t n,
                                       std::size_t stride) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = f(x + i * stride);
    return out;
  };
  return m;
}

}  // namespace lofi
