#pragma once

#include <cstddef>
#include <vector>

#include "softvoronoi/assign.hpp"
#include "softvoronoi/geometry.hpp"

namespace softvoronoi {

struct KMeansResult {
  Centroids centroids;
  // Nearest-centroid labels of the returned centroids.
  Assignment labels;
  // J(mu) after each update; non-increasing.
  std::vector<double> distortion_history;
  std::size_t iterations_run = 0;
  bool converged = false;
};

// r_j = sum_i R_ij and w_j = sum_i R_ij x_i.
struct GradientStats {
  std::vector<double> mass;
  Matrix weighted_sum;
};

struct SoftRBFStep {
  Centroids centroids;
  ResponsibilityMatrix responsibilities;
  GradientStats stats;
  // 2 (r_j mu_j - w_j), evaluated at the incoming centroids.
  Matrix gradient;
  // Clusters whose mass fell at or below the floor and were left in place.
  std::size_t frozen_clusters = 0;
};

struct SoftRBFResult {
  Centroids centroids;
  // Responsibilities of the final step (computed at the pre-update centres).
  ResponsibilityMatrix responsibilities;
  // L_sigma at the start of each step.
  std::vector<double> loss_history;
  std::size_t iterations_run = 0;
  std::size_t zero_mass_events = 0;
  std::size_t renormalized_rows = 0;
};

inline constexpr double kMassFloorPerPoint = 1e-12;

// Lloyd iterations from mu0. Stops when every centre moves less than tol or
// after max_iterations updates. Empty clusters keep their previous centre.
KMeansResult kmeans(const Dataset& x, const Centroids& mu0, std::size_t max_iterations, double tol);

// Default tolerance 1e-9 * radius.
KMeansResult kmeans(const Dataset& x, const Centroids& mu0, std::size_t max_iterations);

GradientStats gradient_stats(const Dataset& x, const ResponsibilityMatrix& resp);

// One full-batch SoftRBF update. Each centre with r_j > mass_floor takes the
// gradient step mu_j - eta_j grad_j with eta_j = 1 / (2 r_j); the rest stay
// put. A negative mass_floor selects the default 1e-12 * n.
SoftRBFStep softrbf_step(const Dataset& x, const Centroids& mu, const Temperature& t,
                         AssignMode mode, double mass_floor = -1.0);

// Exactly `iterations` steps, no early stopping.
SoftRBFResult softrbf_fit(const Dataset& x, const Centroids& mu0, const Temperature& t,
                          std::size_t iterations, AssignMode mode);

// sum_i min_j ||x_i - mu_j||^2
double hard_distortion(const Dataset& x, const Centroids& mu);

// sum_ij R_ij ||x_i - mu_j||^2
double soft_distortion(const Dataset& x, const Centroids& mu, const ResponsibilityMatrix& resp);

// sum_ij R_ij ||x_i - mu_j||^2 + 2 sigma^2 sum_ij R_ij log R_ij, with 0 log 0 = 0.
double entropic_objective(const Dataset& x, const Centroids& mu, const ResponsibilityMatrix& resp,
                          const Temperature& t);

}  // namespace softvoronoi
