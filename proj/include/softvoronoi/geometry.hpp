#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "softvoronoi/matrix.hpp"

namespace softvoronoi {

// n points in R^d with optional ground-truth labels. The bounding radius is
// max_i ||x_i||, computed once at construction.
class Dataset {
 public:
  explicit Dataset(Matrix points, std::optional<std::vector<int>> labels = std::nullopt);

  const Matrix& points() const { return points_; }
  std::span<const double> point(std::size_t i) const { return points_.row(i); }
  std::size_t n() const { return points_.rows(); }
  std::size_t d() const { return points_.cols(); }
  double radius() const { return radius_; }
  const std::optional<std::vector<int>>& labels() const { return labels_; }

  bool operator==(const Dataset&) const = default;

 private:
  Matrix points_;
  std::optional<std::vector<int>> labels_;
  double radius_ = 0.0;
};

// k cluster centres in R^d. Order is significant.
class Centroids {
 public:
  explicit Centroids(Matrix centers);

  const Matrix& centers() const { return centers_; }
  std::span<const double> center(std::size_t j) const { return centers_.row(j); }
  std::span<double> center(std::size_t j) { return centers_.row(j); }
  std::size_t k() const { return centers_.rows(); }
  std::size_t d() const { return centers_.cols(); }

  bool operator==(const Centroids&) const = default;

 private:
  Matrix centers_;
};

// sq(i, j) = ||x_i - mu_j||^2.
struct DistanceMatrix {
  Matrix sq;

  std::size_t n() const { return sq.rows(); }
  std::size_t k() const { return sq.cols(); }
};

// perm[j] is the index in the second centroid set matched to centre j of the
// first set.
using Permutation = std::vector<std::size_t>;

struct PermutationMatch {
  Permutation perm;
  double distance = 0.0;
};

// Largest k accepted by optimal_permutation_match (10! candidates).
inline constexpr std::size_t kMaxExhaustiveK = 10;

double squared_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

DistanceMatrix pairwise_sq_distances(const Dataset& x, const Centroids& mu);
DistanceMatrix pairwise_sq_distances(const Matrix& rows, const Centroids& mu);

// sum_j ||a_j - b_{perm[j]}||, root distances.
double centroid_set_distance(const Centroids& a, const Centroids& b, const Permutation& perm);

// max_j ||a_j - b_{perm[j]}||.
double max_centroid_deviation(const Centroids& a, const Centroids& b, const Permutation& perm);

// Exhaustive search over all k! permutations. Ties resolve to the
// lexicographically smallest permutation.
PermutationMatch optimal_permutation_match(const Centroids& a, const Centroids& b);

bool is_bijection(const Permutation& perm, std::size_t k);

}  // namespace softvoronoi
