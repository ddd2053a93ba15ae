#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "softvoronoi/assign.hpp"
#include "softvoronoi/cluster.hpp"
#include "softvoronoi/geometry.hpp"
#include "softvoronoi/synthdata.hpp"

namespace softvoronoi {

// Temperatures in the order they are swept. Log-spaced grids run from
// sigma_min up to sigma_max.
struct SigmaSchedule {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double sigma_min() const;
  double sigma_max() const;
};

// sigma_t = sigma_min * (sigma_max / sigma_min)^(t / (L - 1)), t = 0..L-1.
SigmaSchedule sigma_schedule(double sigma_min, double sigma_max, std::size_t count);

// Arbitrary explicit schedule; entries must be positive and finite.
SigmaSchedule explicit_schedule(std::vector<double> values);

enum class Protocol { fixed, resampled };

std::string_view to_string(Protocol protocol);
Protocol parse_protocol(std::string_view name);

struct ExperimentConfig {
  GenSpec dataset;
  std::size_t k = 3;
  std::size_t iterations = 150;
  std::size_t runs = 200;
  SigmaSchedule schedule = sigma_schedule(1e-3, 1e-1, 50);
  AssignMode mode = AssignMode::softmax;
  Protocol protocol = Protocol::fixed;
  std::uint64_t master_seed = 0;

  void validate() const;
};

// Counters accumulated over every fit in a sweep.
struct Diagnostics {
  std::size_t zero_mass_events = 0;
  std::size_t renormalized_rows = 0;
  // Soft fits whose final loss exceeded their first loss.
  std::size_t loss_increase_runs = 0;
  // K-Means runs whose distortion history ever increased.
  std::size_t lloyd_monotonicity_violations = 0;
  std::size_t kmeans_unconverged = 0;
  std::size_t kmeans_runs = 0;
  std::size_t soft_runs = 0;

  Diagnostics& operator+=(const Diagnostics& other);
};

struct CurveRecord {
  double sigma = 0.0;
  double mean_r = 0.0;
  double std_r = 0.0;
  // Mean over runs of max_j ||mu_j^KM - mu_pi(j)^soft||.
  double max_centroid_dev = 0.0;
  std::vector<double> discrepancies;
  std::vector<double> max_devs;
};

struct ConvergenceCurve {
  Protocol protocol = Protocol::fixed;
  std::string dataset;
  AssignMode mode = AssignMode::softmax;
  std::vector<CurveRecord> records;
  Diagnostics diagnostics;

  std::vector<double> sigmas() const;
  std::vector<double> means() const;
};

// Forgy initialisation: k distinct data points chosen uniformly.
Centroids draw_init(const Dataset& x, std::size_t k, std::uint64_t seed);

// Seeds. Fixed protocol init i uses derive_seed(master, {1, i}); resampled
// trial (l, i) uses derive_seed(master, {2, l, i}).
std::uint64_t fixed_init_seed(std::uint64_t master, std::size_t trial);
std::uint64_t resampled_init_seed(std::uint64_t master, std::size_t sigma_index,
                                  std::size_t trial);

// One (init, sigma) comparison: K-Means and SoftRBF from the same init,
// matched under the optimal permutation.
struct PairedRun {
  double discrepancy = 0.0;
  double max_dev = 0.0;
  Diagnostics diagnostics;
};

// workers == 0 selects the hardware concurrency. Results do not depend on it.
ConvergenceCurve run_fixed_init(const ExperimentConfig& cfg, const Dataset& x,
                                std::size_t workers = 1);
ConvergenceCurve run_resampled(const ExperimentConfig& cfg, const Dataset& x,
                               std::size_t workers = 1);
// Generates cfg.dataset and dispatches on cfg.protocol.
ConvergenceCurve run_experiment(const ExperimentConfig& cfg, std::size_t workers = 1);

struct RateFit {
  double m = 0.0;
  double b = 0.0;
  double r2 = 0.0;
  std::size_t points_used = 0;
  std::size_t points_excluded = 0;
  std::string fit_range = "full";
};

// OLS of log R on log sigma over entries with R > 0. Throws InvalidInput with
// fewer than two usable points.
RateFit loglog_fit(std::span<const double> sigmas, std::span<const double> values);
RateFit loglog_fit(const ConvergenceCurve& curve);
// Same fit restricted to the smaller half (ceil(L/2)) of the temperatures.
RateFit loglog_fit_lower_half(const ConvergenceCurve& curve);

// Spearman rank correlation with average ranks for ties. Returns 0 when
// either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

struct SeparationStats {
  double radius = 0.0;
  double alpha = 0.0;
  double gamma_min = 0.0;
};

SeparationStats separation_stats(const Dataset& x, const Centroids& km_centroids);
SeparationStats separation_stats(const Dataset& x, const KMeansResult& km);

// Soft centroids tilde mu_j = w_j / r_j built from responsibilities at the
// K-Means centres, compared centre-by-centre with those centres.
struct SoftCentroidDeviation {
  double sigma = 0.0;
  double max_dev = 0.0;
  // sum_{i in S_j} r_ij >= |S_j| / 2 for every j.
  bool mass_condition = false;
};

SoftCentroidDeviation soft_centroid_deviation(const Dataset& x, const Centroids& km_centroids,
                                              const Temperature& t, AssignMode mode);

struct BoundReport {
  AssignMode mode = AssignMode::softmax;
  double sigma = 0.0;
  double deviation = 0.0;
  // softmax: (2R/alpha)(k-1) exp(-gamma_min^2 / (2 sigma^2)).
  double bound = 0.0;
  // entmax15: deviation / sigma.
  double ratio = 0.0;
  bool applicable = false;
  bool vacuous = false;
  bool pass = true;
};

// mass_condition gates applicability of the softmax bound. A zero margin or
// empty cell makes the bound vacuous rather than failing.
BoundReport check_bounds(const SeparationStats& stats, std::size_t k, double sigma,
                         double deviation, AssignMode mode, bool mass_condition = true);

// Bound checks for one K-Means solution across a schedule: at each sigma the
// soft centroids are rebuilt from responsibilities at the K-Means centres.
struct BoundSweep {
  SeparationStats stats;
  std::vector<BoundReport> reports;
  std::size_t applicable = 0;
  std::size_t violations = 0;
};

BoundSweep verify_bounds(const Dataset& x, const Centroids& km_centroids,
                         const SigmaSchedule& schedule, AssignMode mode);

// max/min of deviation/sigma over the smaller half of the schedule; infinite
// if any ratio there is zero.
double ratio_spread_lower_half(std::span<const double> sigmas, std::span<const double> deviations);

}  // namespace softvoronoi
