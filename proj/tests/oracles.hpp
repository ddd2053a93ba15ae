#pragma once

// Reference computations used only by tests. Each one takes a different
// route from the library code it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "softvoronoi/geometry.hpp"
#include "softvoronoi/matrix.hpp"
#include "softvoronoi/rng.hpp"

namespace oracle {

// Entmax-1.5 by bisection on sum_j [(z_j - tau)/2]_+^2 = 1.
inline std::vector<double> entmax15_bisection(const std::vector<double>& z) {
  auto excess = [&](long double tau) {
    long double s = 0.0L;
    for (double zj : z) {
      const long double g = std::max<long double>((zj - tau) / 2.0L, 0.0L);
      s += g * g;
    }
    return s - 1.0L;
  };
  long double lo = *std::min_element(z.begin(), z.end()) - 2.0L;
  long double hi = *std::max_element(z.begin(), z.end());
  for (int it = 0; it < 200; ++it) {
    const long double mid = 0.5L * (lo + hi);
    if (excess(mid) > 0.0L) lo = mid;
    else hi = mid;
  }
  const long double tau = 0.5L * (lo + hi);
  std::vector<double> p;
  for (double zj : z) {
    const long double g = std::max<long double>((zj - tau) / 2.0L, 0.0L);
    p.push_back(static_cast<double>(g * g));
  }
  return p;
}

// Softmax of -sq / (2 sigma^2) in extended precision, no shifting.
inline std::vector<double> softmax_direct(const std::vector<double>& sq, double sigma) {
  std::vector<long double> e;
  long double total = 0.0L;
  for (double v : sq) {
    e.push_back(std::exp(-static_cast<long double>(v) / (2.0L * sigma * sigma)));
    total += e.back();
  }
  std::vector<double> out;
  for (long double v : e) out.push_back(static_cast<double>(v / total));
  return out;
}

// Minimum over all k^n label assignments of sum_i ||x_i - mu_{l(i)}||^2.
inline double min_distortion_enumerated(const softvoronoi::Matrix& x, const softvoronoi::Matrix& mu) {
  const std::size_t n = x.rows();
  const std::size_t k = mu.rows();
  std::vector<std::size_t> labels(n, 0);
  double best = INFINITY;
  for (;;) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < x.cols(); ++c) {
        const double diff = x(i, c) - mu(labels[i], c);
        total += diff * diff;
      }
    }
    best = std::min(best, total);
    std::size_t pos = 0;
    while (pos < n && ++labels[pos] == k) labels[pos++] = 0;
    if (pos == n) break;
  }
  return best;
}

// All permutations of {0..k-1} by recursive insertion (not lexicographic).
inline void for_each_permutation(std::size_t k,
                                 const std::function<void(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> perm;
  std::vector<bool> used(k, false);
  std::function<void()> rec = [&] {
    if (perm.size() == k) {
      fn(perm);
      return;
    }
    for (std::size_t v = 0; v < k; ++v) {
      if (used[v]) continue;
      used[v] = true;
      perm.push_back(v);
      rec();
      perm.pop_back();
      used[v] = false;
    }
  };
  rec();
}

inline softvoronoi::Matrix random_matrix(softvoronoi::Rng& rng, std::size_t rows, std::size_t cols,
                                         double lo, double hi) {
  softvoronoi::Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = rng.uniform(lo, hi);
  return m;
}

// Random row-stochastic matrix; roughly a third of the rows are sparse.
inline softvoronoi::Matrix random_stochastic(softvoronoi::Rng& rng, std::size_t rows,
                                             std::size_t cols) {
  softvoronoi::Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    double total = 0.0;
    const bool sparse = rng.below(3) == 0;
    for (std::size_t c = 0; c < cols; ++c) {
      double v = -std::log(1.0 - rng.uniform());
      if (sparse && rng.below(2) == 0) v = 0.0;
      m(i, c) = v;
      total += v;
    }
    if (total == 0.0) {
      m(i, rng.below(cols)) = 1.0;
      total = 1.0;
    }
    for (std::size_t c = 0; c < cols; ++c) m(i, c) /= total;
  }
  return m;
}

}  // namespace oracle
