#include "softvoronoi/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "softvoronoi/error.hpp"

namespace softvoronoi {

namespace {

void require_dims(const Dataset& x, const Centroids& mu, const char* op) {
  if (x.d() != mu.d()) {
    throw InvalidInput(std::string(op) + ": dimension mismatch (data d=" + std::to_string(x.d()) +
                       ", centroids d=" + std::to_string(mu.d()) + ")");
  }
}

void require_resp_shape(const Dataset& x, const Centroids& mu, const ResponsibilityMatrix& resp,
                        const char* op) {
  if (resp.n() != x.n() || resp.k() != mu.k()) {
    throw InvalidInput(std::string(op) + ": responsibility matrix shape does not match n x k");
  }
}

}  // namespace

KMeansResult kmeans(const Dataset& x, const Centroids& mu0, std::size_t max_iterations,
                    double tol) {
  require_dims(x, mu0, "kmeans");
  if (x.n() < mu0.k()) {
    throw InvalidInput("kmeans: n = " + std::to_string(x.n()) + " is smaller than k = " +
                       std::to_string(mu0.k()));
  }
  if (max_iterations < 1) throw InvalidInput("kmeans: need at least one iteration");
  if (!(tol >= 0.0)) throw InvalidInput("kmeans: tolerance must be >= 0");

  const std::size_t k = mu0.k();
  const std::size_t d = x.d();
  Centroids mu = mu0;
  KMeansResult result{mu0, {}, {}, 0, false};

  Matrix sums(k, d);
  std::vector<std::size_t> counts(k);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    const Assignment assignment = hard_assign(pairwise_sq_distances(x, mu));
    std::fill(counts.begin(), counts.end(), 0);
    sums = Matrix(k, d);
    for (std::size_t i = 0; i < x.n(); ++i) {
      const std::size_t j = assignment.labels[i];
      ++counts[j];
      auto s = sums.row(j);
      const auto xi = x.point(i);
      for (std::size_t c = 0; c < d; ++c) s[c] += xi[c];
    }
    double max_shift = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] == 0) continue;
      auto centre = mu.center(j);
      double shift2 = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double updated = sums(j, c) / static_cast<double>(counts[j]);
        const double diff = updated - centre[c];
        shift2 += diff * diff;
        centre[c] = updated;
      }
      max_shift = std::max(max_shift, std::sqrt(shift2));
    }
    result.distortion_history.push_back(hard_distortion(x, mu));
    result.iterations_run = iter + 1;
    if (max_shift < tol) {
      result.converged = true;
      break;
    }
  }
  result.labels = hard_assign(pairwise_sq_distances(x, mu));
  result.centroids = std::move(mu);
  return result;
}

KMeansResult kmeans(const Dataset& x, const Centroids& mu0, std::size_t max_iterations) {
  return kmeans(x, mu0, max_iterations, 1e-9 * x.radius());
}

GradientStats gradient_stats(const Dataset& x, const ResponsibilityMatrix& resp) {
  const std::size_t k = resp.k();
  const std::size_t d = x.d();
  if (resp.n() != x.n()) throw InvalidInput("gradient_stats: row count mismatch");
  GradientStats stats{std::vector<double>(k, 0.0), Matrix(k, d)};
  for (std::size_t i = 0; i < x.n(); ++i) {
    const auto xi = x.point(i);
    const auto ri = resp.r.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      const double weight = ri[j];
      if (weight == 0.0) continue;
      stats.mass[j] += weight;
      auto w = stats.weighted_sum.row(j);
      for (std::size_t c = 0; c < d; ++c) w[c] += weight * xi[c];
    }
  }
  return stats;
}

SoftRBFStep softrbf_step(const Dataset& x, const Centroids& mu, const Temperature& t,
                         AssignMode mode, double mass_floor) {
  require_dims(x, mu, "softrbf_step");
  if (mode == AssignMode::hard) {
    throw InvalidInput("softrbf_step: mode must be softmax or entmax15");
  }
  if (mass_floor < 0.0) mass_floor = kMassFloorPerPoint * static_cast<double>(x.n());

  const std::size_t k = mu.k();
  const std::size_t d = mu.d();
  ResponsibilityMatrix resp = responsibilities(pairwise_sq_distances(x, mu), t, mode);
  GradientStats stats = gradient_stats(x, resp);

  SoftRBFStep step{mu, std::move(resp), std::move(stats), Matrix(k, d), 0};
  for (std::size_t j = 0; j < k; ++j) {
    const double mass = step.stats.mass[j];
    const auto old_centre = mu.center(j);
    const auto w = step.stats.weighted_sum.row(j);
    auto grad = step.gradient.row(j);
    for (std::size_t c = 0; c < d; ++c) grad[c] = 2.0 * (mass * old_centre[c] - w[c]);
    if (mass <= mass_floor) {
      ++step.frozen_clusters;
      continue;
    }
    const double eta = 1.0 / (2.0 * mass);
    auto centre = step.centroids.center(j);
    for (std::size_t c = 0; c < d; ++c) centre[c] = old_centre[c] - eta * grad[c];
  }
  return step;
}

SoftRBFResult softrbf_fit(const Dataset& x, const Centroids& mu0, const Temperature& t,
                          std::size_t iterations, AssignMode mode) {
  if (iterations < 1) throw InvalidInput("softrbf_fit: need at least one iteration");
  SoftRBFResult result{mu0, {}, {}, 0, 0, 0};
  result.loss_history.reserve(iterations);
  for (std::size_t iter = 0; iter < iterations; ++iter) {
    SoftRBFStep step = softrbf_step(x, result.centroids, t, mode);
    result.loss_history.push_back(soft_distortion(x, result.centroids, step.responsibilities));
    result.zero_mass_events += step.frozen_clusters;
    result.renormalized_rows += step.responsibilities.renormalized_rows;
    result.centroids = std::move(step.centroids);
    result.responsibilities = std::move(step.responsibilities);
    result.iterations_run = iter + 1;
  }
  return result;
}

double hard_distortion(const Dataset& x, const Centroids& mu) {
  require_dims(x, mu, "hard_distortion");
  double total = 0.0;
  for (std::size_t i = 0; i < x.n(); ++i) {
    double best = squared_distance(x.point(i), mu.center(0));
    for (std::size_t j = 1; j < mu.k(); ++j) {
      best = std::min(best, squared_distance(x.point(i), mu.center(j)));
    }
    total += best;
  }
  return total;
}

double soft_distortion(const Dataset& x, const Centroids& mu, const ResponsibilityMatrix& resp) {
  require_dims(x, mu, "soft_distortion");
  require_resp_shape(x, mu, resp, "soft_distortion");
  double total = 0.0;
  for (std::size_t i = 0; i < x.n(); ++i) {
    for (std::size_t j = 0; j < mu.k(); ++j) {
      const double weight = resp.r(i, j);
      if (weight == 0.0) continue;
      total += weight * squared_distance(x.point(i), mu.center(j));
    }
  }
  return total;
}

double entropic_objective(const Dataset& x, const Centroids& mu, const ResponsibilityMatrix& resp,
                          const Temperature& t) {
  double entropy_term = 0.0;
  for (double v : resp.r.data()) {
    if (v > 0.0) entropy_term += v * std::log(v);
  }
  return soft_distortion(x, mu, resp) + 2.0 * t.sigma() * t.sigma() * entropy_term;
}

}  // namespace softvoronoi
