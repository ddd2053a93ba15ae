#include "softvoronoi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "softvoronoi/error.hpp"

namespace softvoronoi {

namespace {

void require_finite(const Matrix& m, const char* what) {
  for (double v : m.data()) {
    if (!std::isfinite(v)) {
      throw InvalidInput(std::string(what) + ": non-finite entry");
    }
  }
}

void require_same_shape(const Centroids& a, const Centroids& b) {
  if (a.k() != b.k() || a.d() != b.d()) {
    throw InvalidInput("centroid sets differ in shape: " + std::to_string(a.k()) + "x" +
                       std::to_string(a.d()) + " vs " + std::to_string(b.k()) + "x" +
                       std::to_string(b.d()));
  }
}

}  // namespace

Dataset::Dataset(Matrix points, std::optional<std::vector<int>> labels)
    : points_(std::move(points)), labels_(std::move(labels)) {
  if (points_.rows() < 1 || points_.cols() < 1) {
    throw InvalidInput("Dataset: need n >= 1 and d >= 1");
  }
  require_finite(points_, "Dataset");
  if (labels_ && labels_->size() != points_.rows()) {
    throw InvalidInput("Dataset: label count does not match point count");
  }
  for (std::size_t i = 0; i < points_.rows(); ++i) {
    double norm2 = 0.0;
    for (double v : points_.row(i)) norm2 += v * v;
    radius_ = std::max(radius_, std::sqrt(norm2));
  }
}

Centroids::Centroids(Matrix centers) : centers_(std::move(centers)) {
  if (centers_.rows() < 1 || centers_.cols() < 1) {
    throw InvalidInput("Centroids: need k >= 1 and d >= 1");
  }
  require_finite(centers_, "Centroids");
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double diff = a[c] - b[c];
    s += diff * diff;
  }
  return s;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

DistanceMatrix pairwise_sq_distances(const Matrix& rows, const Centroids& mu) {
  if (rows.cols() != mu.d()) {
    throw InvalidInput("pairwise_sq_distances: dimension mismatch (" +
                       std::to_string(rows.cols()) + " vs " + std::to_string(mu.d()) + ")");
  }
  DistanceMatrix out{Matrix(rows.rows(), mu.k())};
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto xi = rows.row(i);
    for (std::size_t j = 0; j < mu.k(); ++j) {
      out.sq(i, j) = squared_distance(xi, mu.center(j));
    }
  }
  return out;
}

DistanceMatrix pairwise_sq_distances(const Dataset& x, const Centroids& mu) {
  return pairwise_sq_distances(x.points(), mu);
}

bool is_bijection(const Permutation& perm, std::size_t k) {
  if (perm.size() != k) return false;
  std::vector<bool> seen(k, false);
  for (std::size_t p : perm) {
    if (p >= k || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

double centroid_set_distance(const Centroids& a, const Centroids& b, const Permutation& perm) {
  require_same_shape(a, b);
  if (!is_bijection(perm, a.k())) {
    throw InvalidInput("centroid_set_distance: permutation is not a bijection on {0..k-1}");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < a.k(); ++j) {
    total += euclidean_distance(a.center(j), b.center(perm[j]));
  }
  return total;
}

double max_centroid_deviation(const Centroids& a, const Centroids& b, const Permutation& perm) {
  require_same_shape(a, b);
  if (!is_bijection(perm, a.k())) {
    throw InvalidInput("max_centroid_deviation: permutation is not a bijection on {0..k-1}");
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < a.k(); ++j) {
    worst = std::max(worst, euclidean_distance(a.center(j), b.center(perm[j])));
  }
  return worst;
}

PermutationMatch optimal_permutation_match(const Centroids& a, const Centroids& b) {
  require_same_shape(a, b);
  const std::size_t k = a.k();
  if (k > kMaxExhaustiveK) {
    throw InvalidInput("optimal_permutation_match: k = " + std::to_string(k) +
                       " exceeds the exhaustive-search bound of " +
                       std::to_string(kMaxExhaustiveK) +
                       "; an assignment-solver mode is required for larger k");
  }
  Matrix cost(k, k);
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t q = 0; q < k; ++q) {
      cost(p, q) = euclidean_distance(a.center(p), b.center(q));
    }
  }

  Permutation perm(k);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  PermutationMatch best{perm, std::numeric_limits<double>::infinity()};
  // next_permutation walks in lexicographic order, so a strict comparison
  // keeps the smallest permutation among ties.
  do {
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += cost(j, perm[j]);
    if (total < best.distance) {
      best.distance = total;
      best.perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace softvoronoi
