#pragma once
//
// Directed acyclic structural graphs with exact conditional-independence
// queries. Separation is decided by the classic reachability procedure
// ("Bayes ball"), extended with functional-determinism closure: a rule
// (given-set => node) states that the node is a deterministic function of
// the given set, so whenever the conditioning set contains the given set,
// the determined node may be treated as observed too. Query nodes that end
// up determined by the conditioning set are constants, hence independent of
// everything.
//
// Generators whose independence structure is not faithful to any DAG (e.g.
// parity targets) bypass the graph with an explicit query override.
//
#include <algorithm>
#include <cstddef>
#include <deque>
#include <utility>
#include <vector>

#include "lofi/errors.hpp"

namespace lofi {

class Dag {
 public:
  explicit Dag(std::size_t node_count = 0)
      : parents_(node_count), children_(node_count) {}

  std::size_t node_count() const { return parents_.size(); }

  void add_edge(std::size_t from, std::size_t to) {
    require_config(from < node_count() && to < node_count() && from != to,
                   "Dag::add_edge: node index out of range");
    parents_[to].push_back(from);
    children_[from].push_back(to);
  }

  /// Declares `node` a deterministic function of `given`.
  void add_determinism(std::vector<std::size_t> given, std::size_t node) {
    require_config(node < node_count(), "Dag::add_determinism: bad node");
    det_rules_.emplace_back(std::move(given), node);
  }

  /// All nodes observed or functionally pinned down by `obs` (fixpoint).
  std::vector<bool> determined_closure(const std::vector<std::size_t>& obs) const {
    std::vector<bool> det(node_count(), false);
    for (std::size_t v : obs) det[v] = true;
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& [given, node] : det_rules_) {
        if (det[node]) continue;
        bool all = true;
        for (std::size_t g : given)
          if (!det[g]) { all = false; break; }
        if (all) {
          det[node] = true;
          changed = true;
        }
      }
    }
    return det;
  }

  /// True iff X_a is independent of {X_b : b in bs} given {X_o : o in obs}.
  bool independent(std::size_t a, const std::vector<std::size_t>& bs,
                   const std::vector<std::size_t>& obs) const {
    const std::vector<bool> det = determined_closure(obs);
    if (det[a]) return true;  // a is a constant given obs
    std::vector<std::size_t> targets;
    for (std::size_t b : bs)
      if (!det[b]) targets.push_back(b);
    if (targets.empty()) return true;

    const std::vector<bool> reach = reachable_from(a, det);
    for (std::size_t b : targets)
      if (reach[b]) return false;
    return true;
  }

 private:
  // Nodes d-connected to `source` given the observed mask `det`.
  std::vector<bool> reachable_from(std::size_t source,
                                   const std::vector<bool>& det) const {
    const std::size_t m = node_count();
    // ancestors of the observed set (inclusive), for collider activation
    std::vector<bool> anc(m, false);
    {
      std::deque<std::size_t> queue;
      for (std::size_t v = 0; v < m; ++v)
        if (det[v]) { anc[v] = true; queue.push_back(v); }
      while (!queue.empty()) {
        std::size_t v = queue.front();
        queue.pop_front();
        for (std::size_t pa : parents_[v])
          if (!anc[pa]) { anc[pa] = true; queue.push_back(pa); }
      }
    }

    constexpr int kFromChild = 0;  // trail arrived moving towards parents
    constexpr int kFromParent = 1; // trail arrived moving towards children
    std::vector<bool> visited(2 * m, false);
    std::vector<bool> reach(m, false);
    std::deque<std::pair<std::size_t, int>> queue;
    queue.emplace_back(source, kFromChild);
    while (!queue.empty()) {
      auto [v, dir] = queue.front();
      queue.pop_front();
      if (visited[2 * v + static_cast<std::size_t>(dir)]) continue;
      visited[2 * v + static_cast<std::size_t>(dir)] = true;
      if (!det[v]) reach[v] = true;
      if (dir == kFromChild && !det[v]) {
        for (std::size_t pa : parents_[v]) queue.emplace_back(pa, kFromChild);
        for (std::size_t ch : children_[v]) queue.emplace_back(ch, kFromParent);
      } else if (dir == kFromParent) {
        if (!det[v])
          for (std::size_t ch : children_[v]) queue.emplace_back(ch, kFromParent);
        if (anc[v])  // collider (or observed ancestor of one): pass upwards
          for (std::size_t pa : parents_[v]) queue.emplace_back(pa, kFromChild);
      }
    }
    return reach;
  }

  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::pair<std::vector<std::size_t>, std::size_t>> det_rules_;
};

}  // namespace lofi
