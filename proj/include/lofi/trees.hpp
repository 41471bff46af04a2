#pragma once
//
// Regression trees (greedy variance-reduction CART) and bootstrap-aggregated
// ensembles. Classification datasets are handled by the same machinery: leaf
// means of 0/1 labels are class probabilities.
//
// Tree growth is exact greedy search over all features at every node; ties
// between equally good splits break towards the lowest feature index and
// smallest threshold, so fits are deterministic. The only randomness is the
// bootstrap resampling, driven by per-tree substreams of one seed.
//
#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lofi/dataset.hpp"
#include "lofi/errors.hpp"
#include "lofi/matrix.hpp"
#include "lofi/model.hpp"
#include "lofi/rng.hpp"

namespace lofi {

struct TreeNode {
  int feature = -1;         // -1 marks a leaf
  double threshold = 0.0;   // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;       // leaf prediction
};

class RegressionTree {
 public:
  double predict_row(const double* x) const {
    int at = 0;
    while (nodes_[static_cast<std::size_t>(at)].feature >= 0) {
      const TreeNode& nd = nodes_[static_cast<std::size_t>(at)];
      at = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes_[static_cast<std::size_t>(at)].value;
  }

  std::size_t node_count() const { return nodes_.size(); }

  static RegressionTree fit(const Matrix& x, const std::vector<double>& y,
                            std::vector<std::size_t> rows,
                            std::size_t max_depth, std::size_t min_leaf) {
    require_config(min_leaf >= 1, "tree: min_leaf must be >= 1");
    require_data(!rows.empty(), "tree: empty training set");
    RegressionTree t;
    t.grow(x, y, std::move(rows), 0, max_depth, min_leaf);
    return t;
  }

 private:
  int grow(const Matrix& x, const std::vector<double>& y,
           std::vector<std::size_t> rows, std::size_t depth,
           std::size_t max_depth, std::size_t min_leaf) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    double sum = 0.0;
    for (std::size_t r : rows) sum += y[r];
    const double n = static_cast<double>(rows.size());
    nodes_[static_cast<std::size_t>(id)].value = sum / n;

    if (depth >= max_depth || rows.size() < 2 * min_leaf) return id;

    // best split maximizes sum_l^2/n_l + sum_r^2/n_r (equivalent to the
    // largest SSE reduction)
    const double parent_score = sum * sum / n;
    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::size_t best_left_count = 0;

    std::vector<std::pair<double, std::size_t>> order(rows.size());
    for (std::size_t j = 0; j < x.cols; ++j) {
      for (std::size_t k = 0; k < rows.size(); ++k)
        order[k] = {x(rows[k], j), rows[k]};
      std::sort(order.begin(), order.end());
      double left_sum = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        left_sum += y[order[k].second];
        if (order[k].first == order[k + 1].first) continue;
        const std::size_t nl = k + 1, nr = order.size() - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double right_sum = sum - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                            right_sum * right_sum / static_cast<double>(nr) -
                            parent_score;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(j);
          best_threshold =
              order[k].first + 0.5 * (order[k + 1].first - order[k].first);
          best_left_count = nl;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left_rows, right_rows;
    left_rows.reserve(best_left_count);
    right_rows.reserve(rows.size() - best_left_count);
    for (std::size_t r : rows)
      (x(r, static_cast<std::size_t>(best_feature)) <= best_threshold
           ? left_rows
           : right_rows)
          .push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    nodes_[static_cast<std::size_t>(id)].feature = best_feature;
    nodes_[static_cast<std::size_t>(id)].threshold = best_threshold;
    const int l = grow(x, y, std::move(left_rows), depth + 1, max_depth, min_leaf);
    nodes_[static_cast<std::size_t>(id)].left = l;
    const int r = grow(x, y, std::move(right_rows), depth + 1, max_depth, min_leaf);
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  std::vector<TreeNode> nodes_;
};

/// Bootstrap-aggregated regression trees. Exposes per-tree predictions so
/// the ensemble-mean identity is testable.
struct BaggedTrees {
  std::vector<RegressionTree> trees;
  std::vector<std::string> feature_names;
  Task task = Task::regression;

  static BaggedTrees fit(const Dataset& d, std::uint64_t seed,
                         std::size_t n_trees, std::size_t max_depth,
                         std::size_t min_leaf) {
    require_config(n_trees >= 1, "bagged trees: need at least one tree");
    BaggedTrees b;
    b.feature_names = d.feature_names;
    b.task = d.task;
    b.trees.reserve(n_trees);
    const std::size_t n = d.n();
    for (std::size_t t = 0; t < n_trees; ++t) {
      Rng rng(derive_seed(seed, {seed_domain::learner, t}));
      std::vector<std::size_t> rows(n);
      for (std::size_t i = 0; i < n; ++i)
        rows[i] = static_cast<std::size_t>(rng.uniform_index(n));
      b.trees.push_back(RegressionTree::fit(d.x, d.y, std::move(rows),
                                            max_depth, min_leaf));
    }
    return b;
  }

  double predict_row(const double* x) const {
    double s = 0.0;
    for (const auto& t : trees) s += t.predict_row(x);
    return s / static_cast<double>(trees.size());
  }

  double predict_row_tree(std::size_t t, const double* x) const {
    return trees[t].predict_row(x);
  }

  PredictionModel as_model() const {
    auto self = *this;  // value capture keeps the ensemble alive
    return make_row_model("bagged_trees", feature_names, task,
                          [self](const double* x) { return self.predict_row(x); });
  }
};

}  // namespace lofi
