#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "softvoronoi/error.hpp"
#include "softvoronoi/evalharness.hpp"
#include "softvoronoi/rng.hpp"

using namespace softvoronoi;

namespace {

ExperimentConfig small_config(DatasetKind kind, Protocol protocol, AssignMode mode) {
  ExperimentConfig cfg;
  cfg.dataset = GenSpec{kind, 120, 4, {}};
  cfg.runs = 4;
  cfg.iterations = 40;
  cfg.schedule = sigma_schedule(1e-3, 1e-1, 6);
  cfg.mode = mode;
  cfg.protocol = protocol;
  cfg.master_seed = 21;
  return cfg;
}

void check_same_curve(const ConvergenceCurve& a, const ConvergenceCurve& b) {
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t l = 0; l < a.records.size(); ++l) {
    CHECK(a.records[l].sigma == b.records[l].sigma);
    CHECK(a.records[l].mean_r == b.records[l].mean_r);
    CHECK(a.records[l].std_r == b.records[l].std_r);
    CHECK(a.records[l].max_centroid_dev == b.records[l].max_centroid_dev);
    CHECK(a.records[l].discrepancies == b.records[l].discrepancies);
    CHECK(a.records[l].max_devs == b.records[l].max_devs);
  }
  CHECK(a.diagnostics.zero_mass_events == b.diagnostics.zero_mass_events);
  CHECK(a.diagnostics.kmeans_runs == b.diagnostics.kmeans_runs);
}

std::vector<double> power_law(const SigmaSchedule& s, double c, double m) {
  std::vector<double> out;
  for (double sigma : s.values) out.push_back(c * std::pow(sigma, m));
  return out;
}

}  // namespace

TEST_CASE("sigma schedules") {
  const SigmaSchedule standard = sigma_schedule(1e-3, 1e-1, 50);
  CHECK(standard.size() == 50);
  CHECK(standard.values.front() == 1e-3);
  CHECK(standard.values.back() == 1e-1);
  CHECK(standard.sigma_min() == 1e-3);
  CHECK(standard.sigma_max() == 1e-1);

  const SigmaSchedule three = sigma_schedule(1, 1e2, 3);
  CHECK(three.values[0] == 1.0);
  CHECK(three.values[1] == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(three.values[2] == 100.0);

  const double ratio = standard.values[1] / standard.values[0];
  for (std::size_t t = 1; t < standard.size(); ++t)
    CHECK(standard.values[t] / standard.values[t - 1] == doctest::Approx(ratio).epsilon(1e-13));

  CHECK_THROWS_AS(sigma_schedule(1e-1, 1e-3, 50), InvalidInput);
  CHECK_THROWS_AS(sigma_schedule(0.0, 1e-1, 50), InvalidInput);
  CHECK_THROWS_AS(sigma_schedule(1e-3, 1e-1, 1), InvalidInput);
  CHECK_THROWS_AS(explicit_schedule({}), InvalidInput);
  CHECK_THROWS_AS(explicit_schedule({0.1, -1.0}), InvalidInput);
  CHECK(explicit_schedule({0.5}).size() == 1);
}

TEST_CASE("log-log fitting") {
  SUBCASE("exact line in log space") {
    std::vector<double> s, r;
    for (double x : {-3.0, -1.0, 0.5, 2.0}) {
      s.push_back(std::exp(x));
      r.push_back(std::exp(2.0 * x + 1.0));
    }
    const RateFit fit = loglog_fit(s, r);
    CHECK(fit.m == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.b == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.points_used == 4);
  }
  SUBCASE("constant curve") {
    const SigmaSchedule s = sigma_schedule(1e-3, 1e-1, 10);
    const RateFit fit = loglog_fit(s.values, std::vector<double>(10, 0.7));
    CHECK(std::abs(fit.m) <= 1e-12);
    CHECK(fit.b == doctest::Approx(std::log(0.7)).epsilon(1e-12));
  }
  SUBCASE("power laws on the default schedule") {
    const SigmaSchedule s = sigma_schedule(1e-3, 1e-1, 50);
    for (double m : {0.5, 1.0, 2.0}) {
      for (double c : {3.0, 0.25}) {
        const RateFit fit = loglog_fit(s.values, power_law(s, c, m));
        CHECK(std::abs(fit.m - m) <= 1e-9);
        CHECK(std::abs(fit.b - std::log(c)) <= 1e-9);
      }
    }
  }
  SUBCASE("zero discrepancies are excluded and counted") {
    const std::vector<double> s{1e-3, 1e-2, 1e-1, 1.0};
    const RateFit fit = loglog_fit(s, std::vector<double>{0.0, 1e-2, 1e-1, 1.0});
    CHECK(fit.points_used == 3);
    CHECK(fit.points_excluded == 1);
    CHECK(fit.m == doctest::Approx(1.0));
  }
  SUBCASE("too few positive points") {
    const std::vector<double> s{1e-3, 1e-2, 1e-1};
    CHECK_THROWS_AS(loglog_fit(s, std::vector<double>{0.0, 0.0, 1.0}), InvalidInput);
    CHECK_THROWS_WITH_AS(loglog_fit(s, std::vector<double>{0.0, 0.0, 0.0}),
                         doctest::Contains("insufficient positive discrepancies"), InvalidInput);
  }
  SUBCASE("lower half of a curve") {
    ConvergenceCurve curve;
    const SigmaSchedule s = sigma_schedule(1e-3, 1e-1, 5);
    for (double sigma : s.values) {
      CurveRecord rec;
      rec.sigma = sigma;
      // Saturates above the midpoint.
      rec.mean_r = sigma <= s.values[2] ? 5.0 * sigma : 5.0 * s.values[2];
      curve.records.push_back(rec);
    }
    const RateFit lower = loglog_fit_lower_half(curve);
    CHECK(lower.points_used == 3);
    CHECK(lower.fit_range == "lower_half");
    CHECK(lower.m == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(loglog_fit(curve).m < 1.0);
  }
}

TEST_CASE("spearman rank correlation") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(spearman(x, std::vector<double>{10, 20, 30, 40, 50}) == doctest::Approx(1.0));
  CHECK(spearman(x, std::vector<double>{5, 4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman(x, std::vector<double>{1, 1e9, 1e10, 1e11, 1e12}) == doctest::Approx(1.0));
  CHECK(spearman(x, std::vector<double>(5, 2.0)) == 0.0);
  // Ties take average ranks: y ranks are (1.5, 1.5, 3, 4, 5).
  const double expected = 0.9746794344808963;
  CHECK(spearman(x, std::vector<double>{1, 1, 2, 3, 4}) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("separation statistics") {
  SUBCASE("symmetric pair") {
    const Dataset x(Matrix(2, 1, {0, 10}));
    const SeparationStats s = separation_stats(x, Centroids(Matrix(2, 1, {0, 10})));
    CHECK(s.gamma_min == 10.0);
    CHECK(s.alpha == 0.5);
    CHECK(s.radius == x.radius());
  }
  SUBCASE("equidistant point") {
    const Dataset x(Matrix(3, 1, {0, 5, 10}));
    CHECK(separation_stats(x, Centroids(Matrix(2, 1, {0, 10}))).gamma_min == 0.0);
  }
  SUBCASE("uneven cells") {
    const Dataset x(Matrix(4, 1, {0, 1, 2, 10}));
    const SeparationStats s = separation_stats(x, Centroids(Matrix(2, 1, {1, 10})));
    CHECK(s.alpha == 0.25);
    CHECK(s.gamma_min == 7.0);
  }
}

TEST_CASE("bound checks") {
  SUBCASE("zero deviation always passes") {
    const SeparationStats stats{5.0, 0.3, 1.0};
    for (double sigma : {1e-3, 0.1, 10.0}) {
      CHECK(check_bounds(stats, 3, sigma, 0.0, AssignMode::softmax).pass);
      CHECK(check_bounds(stats, 3, sigma, 0.0, AssignMode::entmax15).pass);
    }
  }
  SUBCASE("exponential bound evaluates directly") {
    const SeparationStats stats{5.0, 0.3, 1.0};
    const BoundReport r = check_bounds(stats, 3, 0.1, 1e-12, AssignMode::softmax);
    CHECK(r.bound == doctest::Approx((2.0 * 5.0 / 0.3) * 2.0 * std::exp(-50.0)).epsilon(1e-14));
    CHECK(r.applicable);
    CHECK_FALSE(r.pass);
    const BoundReport wide = check_bounds(stats, 3, 2.0, 1.0, AssignMode::softmax);
    CHECK(wide.pass);
  }
  SUBCASE("unmet mass condition is not applicable") {
    const SeparationStats stats{5.0, 0.3, 1.0};
    const BoundReport r = check_bounds(stats, 3, 0.1, 1.0, AssignMode::softmax, false);
    CHECK_FALSE(r.applicable);
    CHECK(r.pass);
  }
  SUBCASE("zero margin is vacuous") {
    const BoundReport r = check_bounds(SeparationStats{5.0, 0.3, 0.0}, 3, 0.1, 1.0, AssignMode::softmax);
    CHECK(r.vacuous);
    CHECK_FALSE(r.applicable);
    CHECK(r.pass);
  }
  SUBCASE("entmax reports deviation over sigma") {
    const BoundReport r = check_bounds(SeparationStats{5.0, 0.3, 1.0}, 3, 0.02, 0.05, AssignMode::entmax15);
    CHECK(r.ratio == doctest::Approx(2.5));
  }
  SUBCASE("ratio spread over the lower half") {
    const std::vector<double> s{1, 2, 3, 4};
    CHECK(ratio_spread_lower_half(s, std::vector<double>{1, 6, 100, 100}) == doctest::Approx(3.0));
    CHECK(std::isinf(ratio_spread_lower_half(s, std::vector<double>{0, 6, 1, 1})));
  }
}

TEST_CASE("soft centroid deviation at the K-Means centres") {
  const Dataset x = generate(GenSpec{DatasetKind::blobs, 300, 0, {}});
  const auto km = kmeans(x, draw_init(x, 3, 0), 150);
  const auto cold = soft_centroid_deviation(x, km.centroids, Temperature(1e-3), AssignMode::softmax);
  CHECK(cold.mass_condition);
  CHECK(cold.max_dev <= 1e-12 * x.radius());
  const auto warm = soft_centroid_deviation(x, km.centroids, Temperature(2.0), AssignMode::softmax);
  CHECK(warm.max_dev > cold.max_dev);
  const BoundSweep sweep = verify_bounds(x, km.centroids, sigma_schedule(1e-3, 1e-1, 10), AssignMode::softmax);
  CHECK(sweep.reports.size() == 10);
  CHECK(sweep.violations == 0);
}

TEST_CASE("fixed-init protocol") {
  SUBCASE("single run at low temperature on blobs") {
    ExperimentConfig cfg;
    cfg.dataset = GenSpec{DatasetKind::blobs, 300, 0, {}};
    cfg.runs = 1;
    cfg.schedule = explicit_schedule({1e-3});
    const Dataset x = generate(cfg.dataset);
    const ConvergenceCurve curve = run_fixed_init(cfg, x);
    REQUIRE(curve.records.size() == 1);
    CHECK(curve.records[0].mean_r <= 1e-2 * x.radius());
    CHECK(curve.records[0].discrepancies.size() == 1);
  }
  SUBCASE("deterministic and independent of worker count") {
    for (AssignMode mode : {AssignMode::softmax, AssignMode::entmax15}) {
      const ExperimentConfig cfg = small_config(DatasetKind::moons, Protocol::fixed, mode);
      const Dataset x = generate(cfg.dataset);
      const ConvergenceCurve a = run_fixed_init(cfg, x, 1);
      check_same_curve(a, run_fixed_init(cfg, x, 1));
      check_same_curve(a, run_fixed_init(cfg, x, 3));
      CHECK(a.diagnostics.kmeans_runs == cfg.runs);
      CHECK(a.diagnostics.soft_runs == cfg.runs * cfg.schedule.size());
    }
  }
  SUBCASE("records aggregate the raw runs") {
    const ExperimentConfig cfg = small_config(DatasetKind::circles, Protocol::fixed, AssignMode::softmax);
    const ConvergenceCurve curve = run_experiment(cfg);
    for (const CurveRecord& rec : curve.records) {
      double sum = 0.0;
      for (double d : rec.discrepancies) {
        CHECK(d >= 0.0);
        sum += d;
      }
      CHECK(rec.mean_r == doctest::Approx(sum / cfg.runs).epsilon(1e-14));
      CHECK(rec.discrepancies.size() == cfg.runs);
      CHECK(rec.max_devs.size() == cfg.runs);
    }
  }
}

TEST_CASE("resampled protocol") {
  SUBCASE("deterministic and independent of worker count") {
    const ExperimentConfig cfg = small_config(DatasetKind::spiral, Protocol::resampled, AssignMode::entmax15);
    const Dataset x = generate(cfg.dataset);
    const ConvergenceCurve a = run_resampled(cfg, x, 1);
    check_same_curve(a, run_resampled(cfg, x, 1));
    check_same_curve(a, run_resampled(cfg, x, 4));
    CHECK(a.diagnostics.kmeans_runs == cfg.runs * cfg.schedule.size());
  }
  SUBCASE("seeds differ across the grid") {
    CHECK(resampled_init_seed(0, 0, 0) != resampled_init_seed(0, 0, 1));
    CHECK(resampled_init_seed(0, 0, 1) != resampled_init_seed(0, 1, 0));
    CHECK(resampled_init_seed(0, 0, 0) != fixed_init_seed(0, 0));
  }
  SUBCASE("circles collapse from the widest to the narrowest temperature") {
    ExperimentConfig cfg;
    cfg.dataset = GenSpec{DatasetKind::circles, 300, 0, {}};
    cfg.runs = 20;
    cfg.protocol = Protocol::resampled;
    cfg.schedule = explicit_schedule({1e-3, 1e-1});
    const ConvergenceCurve curve = run_experiment(cfg);
    CHECK(curve.records.front().mean_r < curve.records.back().mean_r);
  }
  SUBCASE("one point per centre gives zero discrepancy") {
    ExperimentConfig cfg;
    cfg.runs = 5;
    cfg.iterations = 10;
    cfg.protocol = Protocol::resampled;
    cfg.schedule = sigma_schedule(1e-3, 1e-1, 4);
    const Dataset x(Matrix(3, 2, {0, 0, 10, 0, 0, 10}));
    for (AssignMode mode : {AssignMode::softmax, AssignMode::entmax15}) {
      cfg.mode = mode;
      for (const CurveRecord& rec : run_resampled(cfg, x).records) CHECK(rec.mean_r == 0.0);
    }
  }
}

TEST_CASE("experiment config validation") {
  ExperimentConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.k = 1;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.runs = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.dataset.n = 2;
  CHECK_THROWS_AS(run_experiment(cfg), InvalidInput);
  CHECK(parse_protocol("resampled") == Protocol::resampled);
  CHECK_THROWS_AS(parse_protocol("other"), InvalidInput);
}
