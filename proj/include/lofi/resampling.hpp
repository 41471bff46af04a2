#pragma once
//
// Row resampling: shuffled train/test splits and balanced k-fold partitions.
// Both are pure functions of (n, parameters, seed).
//
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "lofi/errors.hpp"
#include "lofi/rng.hpp"

namespace lofi {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Shuffled split with round(train_fraction * n) training rows
/// (clamped so both parts are non-empty).
inline Split split(std::size_t n, double train_fraction, std::uint64_t seed) {
  require_config(n >= 2, "split: need at least 2 rows");
  require_config(train_fraction > 0.0 && train_fraction < 1.0,
                 "split: train_fraction must be in (0, 1)");
  std::size_t n_train =
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (n_train < 1) n_train = 1;
  if (n_train > n - 1) n_train = n - 1;
  Rng rng(derive_seed(seed, {seed_domain::split}));
  auto perm = rng.permutation(n);
  Split s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  return s;
}

/// k shuffled folds with balanced sizes: the first n mod k folds get one
/// extra row. Every row appears in exactly one test fold.
inline std::vector<Split> kfold(std::size_t n, int k, std::uint64_t seed) {
  require_config(k >= 2, "kfold: k must be at least 2");
  require_config(static_cast<std::size_t>(k) <= n, "kfold: k cannot exceed n");
  Rng rng(derive_seed(seed, {seed_domain::fold}));
  auto perm = rng.permutation(n);
  std::vector<Split> folds(static_cast<std::size_t>(k));
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    folds[f].test.assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                         perm.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  for (std::size_t f = 0; f < folds.size(); ++f) {
    folds[f].train.reserve(n - folds[f].test.size());
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g == f) continue;
      folds[f].train.insert(folds[f].train.end(), folds[g].test.begin(),
                            folds[g].test.end());
    }
  }
  return folds;
}

}  // namespace lofi
