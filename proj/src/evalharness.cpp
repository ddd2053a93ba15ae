#include "softvoronoi/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "softvoronoi/error.hpp"
#include "softvoronoi/rng.hpp"

namespace softvoronoi {

namespace {

constexpr std::uint64_t kFixedProtocolId = 1;
constexpr std::uint64_t kResampledProtocolId = 2;

// Runs body(i) for i in [0, count). Each index is processed exactly once;
// callers write results into slot i so ordering never depends on scheduling.
template <typename Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

bool non_increasing(const std::vector<double>& values) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[i - 1]) return false;
  }
  return true;
}

Diagnostics kmeans_diagnostics(const KMeansResult& km) {
  Diagnostics d;
  d.kmeans_runs = 1;
  if (!non_increasing(km.distortion_history)) d.lloyd_monotonicity_violations = 1;
  if (!km.converged) d.kmeans_unconverged = 1;
  return d;
}

PairedRun compare_with_soft(const Dataset& x, const Centroids& init, const Centroids& km_centroids,
                            const ExperimentConfig& cfg, double sigma) {
  const SoftRBFResult soft =
      softrbf_fit(x, init, Temperature(sigma), cfg.iterations, cfg.mode);
  const PermutationMatch match = optimal_permutation_match(km_centroids, soft.centroids);
  PairedRun run;
  run.discrepancy = match.distance;
  run.max_dev = max_centroid_deviation(km_centroids, soft.centroids, match.perm);
  run.diagnostics.soft_runs = 1;
  run.diagnostics.zero_mass_events = soft.zero_mass_events;
  run.diagnostics.renormalized_rows = soft.renormalized_rows;
  if (soft.loss_history.back() > soft.loss_history.front()) {
    run.diagnostics.loss_increase_runs = 1;
  }
  return run;
}

// Reduces grid cells (sigma-major, trial-minor) into curve records in index order.
void aggregate(ConvergenceCurve& curve, const SigmaSchedule& schedule, std::size_t runs,
               const std::vector<PairedRun>& cells) {
  curve.records.clear();
  for (std::size_t l = 0; l < schedule.size(); ++l) {
    CurveRecord rec;
    rec.sigma = schedule.values[l];
    rec.discrepancies.reserve(runs);
    rec.max_devs.reserve(runs);
    double sum = 0.0;
    double dev_sum = 0.0;
    for (std::size_t i = 0; i < runs; ++i) {
      const PairedRun& cell = cells[l * runs + i];
      rec.discrepancies.push_back(cell.discrepancy);
      rec.max_devs.push_back(cell.max_dev);
      sum += cell.discrepancy;
      dev_sum += cell.max_dev;
      curve.diagnostics += cell.diagnostics;
    }
    const double count = static_cast<double>(runs);
    rec.mean_r = sum / count;
    rec.max_centroid_dev = dev_sum / count;
    if (runs > 1) {
      double ss = 0.0;
      for (double v : rec.discrepancies) ss += (v - rec.mean_r) * (v - rec.mean_r);
      rec.std_r = std::sqrt(ss / (count - 1.0));
    }
    curve.records.push_back(std::move(rec));
  }
}

std::vector<std::size_t> lower_half_indices(std::span<const double> sigmas) {
  std::vector<std::size_t> order(sigmas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sigmas[a] < sigmas[b]; });
  order.resize((sigmas.size() + 1) / 2);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && values[order[end]] == values[order[start]]) ++end;
    const double rank = 0.5 * static_cast<double>(start + end - 1) + 1.0;
    for (std::size_t p = start; p < end; ++p) ranks[order[p]] = rank;
    start = end;
  }
  return ranks;
}

}  // namespace

double SigmaSchedule::sigma_min() const {
  return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
}

double SigmaSchedule::sigma_max() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

SigmaSchedule sigma_schedule(double sigma_min, double sigma_max, std::size_t count) {
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min) || !std::isfinite(sigma_max)) {
    throw InvalidInput("sigma_schedule: need 0 < sigma_min < sigma_max");
  }
  if (count < 2) throw InvalidInput("sigma_schedule: need L >= 2");
  SigmaSchedule s;
  s.values.resize(count);
  const double ratio = sigma_max / sigma_min;
  const double last = static_cast<double>(count - 1);
  for (std::size_t t = 0; t < count; ++t) {
    s.values[t] = sigma_min * std::pow(ratio, static_cast<double>(t) / last);
  }
  s.values.front() = sigma_min;
  s.values.back() = sigma_max;
  return s;
}

SigmaSchedule explicit_schedule(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("schedule: need at least one sigma");
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("schedule: sigma must be finite and > 0");
  }
  return SigmaSchedule{std::move(values)};
}

std::string_view to_string(Protocol protocol) {
  return protocol == Protocol::fixed ? "fixed" : "resampled";
}

Protocol parse_protocol(std::string_view name) {
  if (name == "fixed") return Protocol::fixed;
  if (name == "resampled") return Protocol::resampled;
  throw InvalidInput("unknown protocol '" + std::string(name) + "' (expected fixed or resampled)");
}

void ExperimentConfig::validate() const {
  if (k < 2) throw InvalidInput("k must be >= 2");
  if (iterations < 1) throw InvalidInput("T must be >= 1");
  if (runs < 1) throw InvalidInput("M must be >= 1");
  if (schedule.values.empty()) throw InvalidInput("schedule must not be empty");
  if (mode == AssignMode::hard) throw InvalidInput("mode must be softmax or entmax15");
  if (dataset.n < k) throw InvalidInput("dataset n must be >= k");
}

Diagnostics& Diagnostics::operator+=(const Diagnostics& other) {
  zero_mass_events += other.zero_mass_events;
  renormalized_rows += other.renormalized_rows;
  loss_increase_runs += other.loss_increase_runs;
  lloyd_monotonicity_violations += other.lloyd_monotonicity_violations;
  kmeans_unconverged += other.kmeans_unconverged;
  kmeans_runs += other.kmeans_runs;
  soft_runs += other.soft_runs;
  return *this;
}

std::vector<double> ConvergenceCurve::sigmas() const {
  std::vector<double> out;
  for (const auto& r : records) out.push_back(r.sigma);
  return out;
}

std::vector<double> ConvergenceCurve::means() const {
  std::vector<double> out;
  for (const auto& r : records) out.push_back(r.mean_r);
  return out;
}

Centroids draw_init(const Dataset& x, std::size_t k, std::uint64_t seed) {
  if (k > x.n()) throw InvalidInput("draw_init: k exceeds n");
  Rng rng(seed);
  std::vector<std::size_t> idx(x.n());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t pick = j + static_cast<std::size_t>(rng.below(x.n() - j));
    std::swap(idx[j], idx[pick]);
  }
  Matrix centers(k, x.d());
  for (std::size_t j = 0; j < k; ++j) {
    const auto p = x.point(idx[j]);
    std::copy(p.begin(), p.end(), centers.row(j).begin());
  }
  return Centroids(std::move(centers));
}

std::uint64_t fixed_init_seed(std::uint64_t master, std::size_t trial) {
  return derive_seed(master, {kFixedProtocolId, trial});
}

std::uint64_t resampled_init_seed(std::uint64_t master, std::size_t sigma_index,
                                  std::size_t trial) {
  return derive_seed(master, {kResampledProtocolId, sigma_index, trial});
}

ConvergenceCurve run_fixed_init(const ExperimentConfig& cfg, const Dataset& x,
                                std::size_t workers) {
  cfg.validate();
  const std::size_t runs = cfg.runs;
  std::vector<Centroids> inits;
  inits.reserve(runs);
  for (std::size_t i = 0; i < runs; ++i) {
    inits.push_back(draw_init(x, cfg.k, fixed_init_seed(cfg.master_seed, i)));
  }
  std::vector<std::optional<KMeansResult>> km(runs);
  parallel_for(runs, workers, [&](std::size_t i) { km[i] = kmeans(x, inits[i], cfg.iterations); });

  const std::size_t levels = cfg.schedule.size();
  std::vector<PairedRun> cells(levels * runs);
  parallel_for(cells.size(), workers, [&](std::size_t c) {
    const std::size_t l = c / runs;
    const std::size_t i = c % runs;
    cells[c] = compare_with_soft(x, inits[i], km[i]->centroids, cfg, cfg.schedule.values[l]);
  });

  ConvergenceCurve curve;
  curve.protocol = Protocol::fixed;
  curve.dataset = std::string(to_string(cfg.dataset.kind));
  curve.mode = cfg.mode;
  for (const auto& r : km) curve.diagnostics += kmeans_diagnostics(*r);
  aggregate(curve, cfg.schedule, runs, cells);
  return curve;
}

ConvergenceCurve run_resampled(const ExperimentConfig& cfg, const Dataset& x,
                               std::size_t workers) {
  cfg.validate();
  const std::size_t runs = cfg.runs;
  const std::size_t levels = cfg.schedule.size();
  std::vector<PairedRun> cells(levels * runs);
  parallel_for(cells.size(), workers, [&](std::size_t c) {
    const std::size_t l = c / runs;
    const std::size_t i = c % runs;
    const Centroids init = draw_init(x, cfg.k, resampled_init_seed(cfg.master_seed, l, i));
    const KMeansResult km = kmeans(x, init, cfg.iterations);
    PairedRun run = compare_with_soft(x, init, km.centroids, cfg, cfg.schedule.values[l]);
    run.diagnostics += kmeans_diagnostics(km);
    cells[c] = std::move(run);
  });

  ConvergenceCurve curve;
  curve.protocol = Protocol::resampled;
  curve.dataset = std::string(to_string(cfg.dataset.kind));
  curve.mode = cfg.mode;
  aggregate(curve, cfg.schedule, runs, cells);
  return curve;
}

ConvergenceCurve run_experiment(const ExperimentConfig& cfg, std::size_t workers) {
  const Dataset x = generate(cfg.dataset);
  return cfg.protocol == Protocol::fixed ? run_fixed_init(cfg, x, workers)
                                         : run_resampled(cfg, x, workers);
}

RateFit loglog_fit(std::span<const double> sigmas, std::span<const double> values) {
  if (sigmas.size() != values.size()) throw InvalidInput("loglog_fit: length mismatch");
  std::vector<double> xs;
  std::vector<double> ys;
  RateFit fit;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (values[i] > 0.0 && sigmas[i] > 0.0) {
      xs.push_back(std::log(sigmas[i]));
      ys.push_back(std::log(values[i]));
    } else {
      ++fit.points_excluded;
    }
  }
  if (xs.size() < 2) {
    throw InvalidInput("loglog_fit: insufficient positive discrepancies (" +
                       std::to_string(xs.size()) + " usable point(s), need 2)");
  }
  const double count = static_cast<double>(xs.size());
  const double mean_x = std::accumulate(xs.begin(), xs.end(), 0.0) / count;
  const double mean_y = std::accumulate(ys.begin(), ys.end(), 0.0) / count;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mean_x;
    const double dy = ys[i] - mean_y;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw InvalidInput("loglog_fit: all usable sigmas are equal");
  fit.m = sxy / sxx;
  fit.b = mean_y - fit.m * mean_x;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.m * xs[i] + fit.b);
    ss_res += r * r;
  }
  fit.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.points_used = xs.size();
  return fit;
}

RateFit loglog_fit(const ConvergenceCurve& curve) {
  const auto s = curve.sigmas();
  const auto m = curve.means();
  return loglog_fit(s, m);
}

RateFit loglog_fit_lower_half(const ConvergenceCurve& curve) {
  const auto s = curve.sigmas();
  const auto m = curve.means();
  std::vector<double> ls;
  std::vector<double> lm;
  for (std::size_t i : lower_half_indices(s)) {
    ls.push_back(s[i]);
    lm.push_back(m[i]);
  }
  RateFit fit = loglog_fit(ls, lm);
  fit.fit_range = "lower_half";
  return fit;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidInput("spearman: length mismatch");
  if (x.size() < 2) return 0.0;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double count = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / count;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / count;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

SeparationStats separation_stats(const Dataset& x, const Centroids& km_centroids) {
  const std::size_t k = km_centroids.k();
  if (k < 2) throw InvalidInput("separation_stats: need k >= 2 for a margin");
  const DistanceMatrix dist = pairwise_sq_distances(x, km_centroids);
  std::vector<std::size_t> sizes(k, 0);
  SeparationStats stats;
  stats.radius = x.radius();
  stats.gamma_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.n(); ++i) {
    const auto row = dist.sq.row(i);
    const std::size_t nearest = argmin_index(row);
    ++sizes[nearest];
    double second = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      if (j != nearest) second = std::min(second, row[j]);
    }
    stats.gamma_min = std::min(stats.gamma_min, std::sqrt(second) - std::sqrt(row[nearest]));
  }
  stats.gamma_min = std::max(stats.gamma_min, 0.0);
  stats.alpha = static_cast<double>(*std::min_element(sizes.begin(), sizes.end())) /
                static_cast<double>(x.n());
  return stats;
}

SeparationStats separation_stats(const Dataset& x, const KMeansResult& km) {
  return separation_stats(x, km.centroids);
}

SoftCentroidDeviation soft_centroid_deviation(const Dataset& x, const Centroids& km_centroids,
                                              const Temperature& t, AssignMode mode) {
  const DistanceMatrix dist = pairwise_sq_distances(x, km_centroids);
  const Assignment cells = hard_assign(dist);
  const ResponsibilityMatrix resp = responsibilities(dist, t, mode);
  const GradientStats stats = gradient_stats(x, resp);
  const std::size_t k = km_centroids.k();

  std::vector<double> own_mass(k, 0.0);
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < x.n(); ++i) {
    const std::size_t j = cells.labels[i];
    own_mass[j] += resp.r(i, j);
    ++sizes[j];
  }

  SoftCentroidDeviation out;
  out.sigma = t.sigma();
  out.mass_condition = true;
  for (std::size_t j = 0; j < k; ++j) {
    if (own_mass[j] < 0.5 * static_cast<double>(sizes[j]) || sizes[j] == 0) {
      out.mass_condition = false;
    }
    const double mass = stats.mass[j];
    if (!(mass > 0.0)) {
      out.max_dev = std::numeric_limits<double>::infinity();
      continue;
    }
    double dev2 = 0.0;
    const auto centre = km_centroids.center(j);
    for (std::size_t c = 0; c < x.d(); ++c) {
      const double diff = stats.weighted_sum(j, c) / mass - centre[c];
      dev2 += diff * diff;
    }
    out.max_dev = std::max(out.max_dev, std::sqrt(dev2));
  }
  return out;
}

BoundReport check_bounds(const SeparationStats& stats, std::size_t k, double sigma,
                         double deviation, AssignMode mode, bool mass_condition) {
  BoundReport report;
  report.mode = mode;
  report.sigma = sigma;
  report.deviation = deviation;
  if (mode == AssignMode::entmax15) {
    report.ratio = deviation / sigma;
    report.applicable = true;
    report.vacuous = !(stats.gamma_min > 0.0);
    return report;
  }
  if (mode != AssignMode::softmax) throw InvalidInput("check_bounds: mode must be soft");
  if (!(stats.gamma_min > 0.0) || !(stats.alpha > 0.0)) {
    report.vacuous = true;
    report.bound = std::numeric_limits<double>::infinity();
    return report;
  }
  const double k_minus_1 = static_cast<double>(k) - 1.0;
  report.bound = (2.0 * stats.radius / stats.alpha) * k_minus_1 *
                 std::exp(-(stats.gamma_min * stats.gamma_min) / (2.0 * sigma * sigma));
  report.applicable = mass_condition;
  report.pass = !report.applicable || deviation <= report.bound;
  return report;
}

BoundSweep verify_bounds(const Dataset& x, const Centroids& km_centroids,
                         const SigmaSchedule& schedule, AssignMode mode) {
  BoundSweep sweep;
  sweep.stats = separation_stats(x, km_centroids);
  for (double sigma : schedule.values) {
    const SoftCentroidDeviation dev =
        soft_centroid_deviation(x, km_centroids, Temperature(sigma), mode);
    BoundReport report =
        check_bounds(sweep.stats, km_centroids.k(), sigma, dev.max_dev, mode, dev.mass_condition);
    if (mode == AssignMode::softmax && report.applicable) {
      ++sweep.applicable;
      if (!report.pass) ++sweep.violations;
    }
    sweep.reports.push_back(report);
  }
  return sweep;
}

double ratio_spread_lower_half(std::span<const double> sigmas,
                               std::span<const double> deviations) {
  if (sigmas.size() != deviations.size() || sigmas.empty()) {
    throw InvalidInput("ratio_spread_lower_half: bad input lengths");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i : lower_half_indices(sigmas)) {
    const double ratio = deviations[i] / sigmas[i];
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace softvoronoi
