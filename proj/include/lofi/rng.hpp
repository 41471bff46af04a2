#pragma once
//
// Seeding policy and random draws.
//
// Every stochastic routine in the library draws from a substream whose seed
// is a pure function of (master_seed, domain tag, indices...) — never of
// execution order. Two consequences we rely on everywhere:
//   * reruns with the same master seed are byte-identical,
//   * work items (features, repetitions, folds, coalitions) can be computed
//     in any order or in parallel without changing results.
//
// Draw algorithms are spelled out here (Box-Muller normals, rejection-free
// bounded ints, Fisher-Yates shuffle) instead of std::*_distribution, whose
// output sequences are implementation-defined.
//
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace lofi {

// ===== seed derivation =====

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Substream seed from a master seed and a list of tags (domain, j, rep, ...).
/// Pure function of its arguments; independent of call order.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = splitmix64(master ^ 0x5851f42d4c957f2dull);
  for (std::uint64_t t : tags) s = splitmix64(s ^ splitmix64(t));
  return s;
}

// Domain tags keep substreams for different purposes disjoint even when the
// numeric indices coincide.
namespace seed_domain {
inline constexpr std::uint64_t split = 0x01;
inline constexpr std::uint64_t fold = 0x02;
inline constexpr std::uint64_t perturb = 0x03;    // (j, rep)
inline constexpr std::uint64_t reduce = 0x04;     // (subset hash, draw)
inline constexpr std::uint64_t refit = 0x05;      // (subset hash)
inline constexpr std::uint64_t learner = 0x06;    // (tree index, ...)
inline constexpr std::uint64_t resample = 0x07;   // (resample index)
inline constexpr std::uint64_t null_perm = 0x08;  // (null refit index)
inline constexpr std::uint64_t sage = 0x09;       // (iteration)
inline constexpr std::uint64_t dgp = 0x0a;
inline constexpr std::uint64_t test = 0x0b;       // permutation tests
}  // namespace seed_domain

// ===== draw engine =====

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Uniform integer in [0, n); unbiased (rejection on the top range).
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  std::uint64_t bits() { return eng_(); }

  /// Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Random permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    shuffle(p);
    return p;
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lofi
