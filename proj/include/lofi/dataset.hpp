#pragma once
//
// Tabular dataset: named numeric feature columns, one target column, and a
// task kind. Instances are validated on construction and treated as
// immutable afterwards; "modifications" produce copies, which keeps every
// estimator safe to run concurrently on shared data.
//
#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "lofi/errors.hpp"
#include "lofi/matrix.hpp"

namespace lofi {

enum class Task { regression, binary_classification };

inline const char* task_name(Task t) {
  return t == Task::regression ? "regression" : "binary-classification";
}

struct Dataset {
  std::vector<std::string> feature_names;
  Matrix x;               // n rows, p feature columns
  std::vector<double> y;  // length n
  Task task = Task::regression;

  Dataset() = default;
  Dataset(std::vector<std::string> names, Matrix features, std::vector<double> target,
          Task t)
      : feature_names(std::move(names)), x(std::move(features)), y(std::move(target)),
        task(t) {
    validate();
  }

  std::size_t n() const { return x.rows; }
  std::size_t p() const { return x.cols; }

  std::optional<std::size_t> feature_index(const std::string& name) const {
    for (std::size_t j = 0; j < feature_names.size(); ++j)
      if (feature_names[j] == name) return j;
    return std::nullopt;
  }

  std::vector<double> col(std::size_t j) const { return x.col(j); }

  /// Copy with one feature column replaced (used by perturbation methods).
  Dataset with_replaced_column(std::size_t j, const std::vector<double>& values) const {
    Dataset out = *this;
    out.x.set_col(j, values);
    return out;
  }

  /// Copy restricted to the given rows, in the given order.
  Dataset subset_rows(std::span<const std::size_t> idx) const {
    Dataset out;
    out.feature_names = feature_names;
    out.task = task;
    out.x = Matrix(idx.size(), p());
    out.y.resize(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      require_data(idx[r] < n(), "Dataset::subset_rows: row index out of range");
      const double* src = x.row_ptr(idx[r]);
      std::copy(src, src + p(), out.x.row_ptr(r));
      out.y[r] = y[idx[r]];
    }
    return out;
  }

  /// Copy keeping only the named subset of feature columns (target intact).
  Dataset select_features(const std::vector<std::size_t>& keep) const {
    Dataset out;
    out.task = task;
    out.y = y;
    out.x = Matrix(n(), keep.size());
    out.feature_names.reserve(keep.size());
    for (std::size_t j : keep) {
      require_data(j < p(), "Dataset::select_features: column index out of range");
      out.feature_names.push_back(feature_names[j]);
    }
    for (std::size_t i = 0; i < n(); ++i)
      for (std::size_t c = 0; c < keep.size(); ++c)
        out.x(i, c) = x(i, keep[c]);
    return out;
  }

 private:
  void validate() const {
    require_data(x.rows >= 1, "dataset must contain at least one row");
    require_data(x.cols >= 1, "dataset must contain at least one feature column");
    require_data(feature_names.size() == x.cols,
                 "feature name count does not match feature column count");
    require_data(y.size() == x.rows, "target length does not match row count");
    std::unordered_set<std::string> seen;
    for (const auto& name : feature_names) {
      require_data(!name.empty(), "feature names must be non-empty");
      require_data(seen.insert(name).second,
                   "duplicate feature name '" + name + "'");
    }
    if (task == Task::binary_classification)
      for (std::size_t i = 0; i < y.size(); ++i)
        require_data(y[i] == 0.0 || y[i] == 1.0,
                     "binary-classification target must be 0/1 (row " +
                         std::to_string(i + 1) + ")");
  }
};

}  // namespace lofi
