#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "chaosadj/density1d.hpp"
#include "chaosadj/errors.hpp"
#include "chaosadj/oracle.hpp"
#include "chaosadj/rng.hpp"
#include "chaosadj/sparse_transition.hpp"

using namespace chaosadj;

namespace {

// Synthetic ensemble sampler: a perfectly linear response plus seeded
// Gaussian noise shrinking with the nominal run count.
std::function<MeanEstimate(double, std::uint64_t)> linear_sampler(double intercept,
                                                                  double slope, double noise,
                                                                  int runs) {
  return [=](double v, std::uint64_t seed) {
    Rng gen(seed);
    std::normal_distribution<double> dist(0.0, noise);
    double acc = 0.0;
    for (int i = 0; i < runs; ++i) acc += intercept + slope * v + dist(gen);
    MeanEstimate m;
    m.mean = acc / double(runs);
    m.sem = noise / std::sqrt(double(runs));
    return m;
  };
}

double max_jump(const ScanTable& t, int obs = 0) {
  double mj = 0.0;
  for (std::size_t i = 1; i < t.parameter.size(); ++i)
    mj = std::max(mj, std::abs(t.rows[i][static_cast<std::size_t>(obs)].mean -
                               t.rows[i - 1][static_cast<std::size_t>(obs)].mean));
  return mj;
}

}  // namespace

TEST_CASE("least-squares line recovers exact linear data") {
  std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> y;
  for (double v : x) y.push_back(-0.75 + 1.25 * v);
  const RegressionResult r = regression_line(x, y);
  CHECK(r.slope == doctest::Approx(1.25).epsilon(1e-13));
  CHECK(r.intercept == doctest::Approx(-0.75).epsilon(1e-13));
  CHECK(r.sigma3 < 1e-12);
  CHECK_THROWS_AS(regression_line({1.0, 2.0}, {1.0, 2.0}), config_error);
  CHECK_THROWS_AS(regression_line({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}), config_error);
}

TEST_CASE("slope bands are calibrated: the true slope is covered on a linear system") {
  int covered = 0;
  for (int s = 0; s < 100; ++s) {
    const RegressionResult r = regression_sensitivity(
        linear_sampler(0.7, 2.5, 0.05, 16), 3.0, 1.0, 25, 777 + static_cast<std::uint64_t>(s));
    if (std::abs(r.slope - 2.5) <= r.sigma3) ++covered;
  }
  CHECK(covered >= 99);
}

TEST_CASE("slope bands widen like the square root of the ensemble size") {
  auto mean_sigma3 = [](int runs) {
    double acc = 0.0;
    for (int s = 0; s < 40; ++s)
      acc += regression_sensitivity(linear_sampler(0.7, 2.5, 0.8, runs), 3.0, 1.0, 9,
                                    50 + static_cast<std::uint64_t>(s))
                 .sigma3;
    return acc / 40.0;
  };
  const double ratio = mean_sigma3(16) / mean_sigma3(32);
  CHECK(ratio > 1.2);
  CHECK(ratio < 1.65);
}

TEST_CASE("parameter sweep validates its configuration") {
  CHECK_THROWS_AS(
      regression_sensitivity(linear_sampler(0.0, 1.0, 0.1, 4), 0.0, 1.0, 4, 1),
      config_error);
  CHECK_THROWS_AS(
      regression_sensitivity(linear_sampler(0.0, 1.0, 0.1, 4), 0.0, 0.0, 9, 1),
      config_error);
  const OdeSystem sys = OdeSystem::lorenz();
  CHECK_THROWS_AS(regression_sensitivity(
                      sys, "q", [](const Vec3& x) { return x[2]; }, 0.0, 1.0, 9, 2, 10.0,
                      1.0, 1),
                  config_error);
  CHECK(default_regression_halfwidth("b") == 0.2);
  CHECK(default_regression_halfwidth("r") == 1.0);
  CHECK(default_regression_halfwidth("z0") == 1.0);
}

TEST_CASE("measured shift sensitivity of the mean height brackets the exact value") {
  // Shifting the attractor along z shifts the mean height one-for-one, so the
  // regression band must cover exactly 1.
  const OdeSystem sys = OdeSystem::lorenz();
  const RegressionResult r = regression_sensitivity(
      sys, "z0", [](const Vec3& x) { return x[2]; }, 0.0, 1.0, 9, 8, 500.0, 50.0, 17);
  CHECK(std::abs(r.slope - 1.0) <= r.sigma3);
  CHECK(r.sigma3 < 0.05);
  CHECK(static_cast<int>(r.params.size()) == 9);
  CHECK(r.params.front() == -1.0);
  CHECK(r.params.back() == 1.0);
}

TEST_CASE("measured rayleigh-number sensitivity of the mean height is near one") {
  const OdeSystem sys = OdeSystem::lorenz();
  const RegressionResult r = regression_sensitivity(
      sys, "r", [](const Vec3& x) { return x[2]; }, 28.0, 1.0, 9, 8, 500.0, 50.0, 17);
  CHECK(r.slope > 0.9);
  CHECK(r.slope < 1.1);
  CHECK(r.sigma3 < 0.06);
}

TEST_CASE("regression sweeps are deterministic for a fixed seed") {
  const OdeSystem sys = OdeSystem::lorenz();
  auto run = [&]() {
    return regression_sensitivity(
        sys, "r", [](const Vec3& x) { return x[2]; }, 28.0, 1.0, 5, 2, 20.0, 5.0, 12);
  };
  const RegressionResult a = run();
  const RegressionResult b = run();
  CHECK(a.slope == b.slope);
  CHECK(a.sigma3 == b.sigma3);
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    CHECK(a.samples[i].mean == b.samples[i].mean);
}

TEST_CASE("unit-slope tent orbits fill the interval uniformly") {
  const Map1D map(MapKind::param_cusp, 1.0);
  const Histogram1D h = histogram_density(map, 32, 2000, 200, 256, 4242);
  CHECK(h.total == 256L * 2000L);
  const double p = 1.0 / 32.0;
  const double expected = double(h.total) * p;
  const double sigma = std::sqrt(double(h.total) * p * (1.0 - p));
  for (long c : h.counts) CHECK(std::abs(double(c) - expected) <= 3.0 * sigma);
  double mass = 0.0;
  for (double d : h.density) mass += d / 32.0;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("logistic orbit density piles up at both interval ends") {
  const Histogram1D h = histogram_density(Map1D(MapKind::logistic, 0.0), 64, 4000, 500, 64, 99);
  CHECK(h.density.front() > 3.0);
  CHECK(h.density.back() > 3.0);
  CHECK(h.density[31] < 1.0);
  CHECK(h.density[32] < 1.0);
  CHECK(h.density.front() > 4.0 * h.density[31]);
}

TEST_CASE("orbit histogram matches the transfer-operator density") {
  const Map1D map(MapKind::param_cusp, 0.5);
  const int bins = 64;
  const Histogram1D h = histogram_density(map, bins, 4000, 500, 128, 31);

  const int n = 1025;  // (n-1) divisible by the bin count, so edges align
  const SparseTransition P = build_fp_matrix(map, n);
  const std::vector<double>& rho = stationary_density(P).density.values;
  const int per = (n - 1) / bins;
  double l1 = 0.0;
  for (int b = 0; b < bins; ++b) {
    double mass = 0.0;
    for (int k = 0; k < per; ++k) {
      const int i = b * per + k;
      mass += 0.5 * (rho[static_cast<std::size_t>(i)] + rho[static_cast<std::size_t>(i) + 1]) /
              double(n - 1);
    }
    l1 += std::abs(h.density[static_cast<std::size_t>(b)] - mass * bins) / double(bins);
  }
  CHECK(l1 < 0.05);
}

TEST_CASE("histograms validate their configuration and reproduce exactly") {
  const Map1D map(MapKind::tent, 0.5);
  CHECK_THROWS_AS(histogram_density(map, 16, 100, 10, 4, 1), config_error);
  CHECK_THROWS_AS(histogram_density(map, 32, 0, 10, 4, 1), config_error);
  const Histogram1D a = histogram_density(map, 32, 500, 50, 8, 5);
  const Histogram1D b = histogram_density(map, 32, 500, 50, 8, 5);
  CHECK(a.counts == b.counts);
}

TEST_CASE("projected orbit histogram reflects the attractor's symmetry") {
  const OdeSystem sys = OdeSystem::lorenz();
  const Histogram2D h = histogram_density(sys, 0, 2, 40, 2000.0, 50.0, 8);
  CHECK(h.total == 200000);

  double mass = 0.0;
  const double cell = (h.a_max - h.a_min) / h.bins * (h.b_max - h.b_min) / h.bins;
  for (double d : h.density) mass += d * cell;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));

  // mirror symmetry in x: compare the x-marginal with its reverse
  std::vector<double> marginal(static_cast<std::size_t>(h.bins), 0.0);
  for (int ia = 0; ia < h.bins; ++ia)
    for (int ib = 0; ib < h.bins; ++ib)
      marginal[static_cast<std::size_t>(ia)] += h.dens(ia, ib);
  double asym = 0.0, total = 0.0;
  for (int ia = 0; ia < h.bins; ++ia) {
    asym += std::abs(marginal[static_cast<std::size_t>(ia)] -
                     marginal[static_cast<std::size_t>(h.bins - 1 - ia)]);
    total += marginal[static_cast<std::size_t>(ia)];
  }
  CHECK(asym / total < 0.15);

  // the z extent covers the attractor, not a blown-up orbit
  CHECK(h.b_min > -5.0);
  CHECK(h.b_max < 60.0);

  CHECK_THROWS_AS(histogram_density(sys, 0, 0, 40, 100.0, 1.0, 1), config_error);
  CHECK_THROWS_AS(histogram_density(sys, 0, 3, 40, 100.0, 1.0, 1), config_error);
  CHECK_THROWS_AS(histogram_density(sys, 0, 2, 16, 100.0, 1.0, 1), config_error);
}

TEST_CASE("mean response scans separate smooth from jumpy families") {
  const ScanTable tent = scan_map_mean(MapKind::tent, 0.0, 1.8, 50, 32, 4000, 500, 11);
  const ScanTable logi = scan_map_mean(MapKind::logistic, 0.0, 1.6, 50, 32, 4000, 500, 11);
  CHECK(static_cast<int>(tent.parameter.size()) == 50);
  CHECK(tent.observables == std::vector<std::string>{"xbar"});

  const double tent_jump = max_jump(tent);
  const double logi_jump = max_jump(logi);
  CHECK(tent_jump < 0.03);
  CHECK(logi_jump > 0.05);
  CHECK(logi_jump > 2.0 * tent_jump);
  for (const auto& row : tent.rows) {
    CHECK(row[0].sem > 0.0);
    CHECK(row[0].sem < 0.01);
  }
}

TEST_CASE("mean height of the lorenz attractor responds smoothly to the rayleigh number") {
  const ScanTable sc = scan_lorenz_vs_r(26.0, 30.0, 9, 8, 500.0, 50.0, 5);
  CHECK(sc.observables == std::vector<std::string>{"zbar", "x2bar"});
  std::vector<double> z, x2;
  for (const auto& row : sc.rows) {
    z.push_back(row[0].mean);
    x2.push_back(row[1].mean);
  }
  const RegressionResult lz = regression_line(sc.parameter, z);
  const RegressionResult lx = regression_line(sc.parameter, x2);
  CHECK(lz.slope > 0.8);
  CHECK(lz.slope < 1.2);
  CHECK(lx.slope > 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    CHECK(std::abs(z[i] - lz.intercept - lz.slope * sc.parameter[i]) < 0.1);
    CHECK(std::abs(x2[i] - lx.intercept - lx.slope * sc.parameter[i]) < 0.2);
  }
}

TEST_CASE("rossler scan emits bounded means with finite uncertainty") {
  const ScanTable sc = scan_rossler_vs_c(12.0, 16.0, 5, 4, 300.0, 50.0, 21);
  CHECK(sc.observables == std::vector<std::string>{"xbar", "zbar"});
  for (const auto& row : sc.rows) {
    CHECK(std::abs(row[0].mean) < 10.0);
    CHECK(row[1].mean > 0.0);
    CHECK(row[1].mean < 30.0);
    CHECK(row[0].sem > 0.0);
    CHECK(row[1].sem > 0.0);
  }
}

TEST_CASE("scan uncertainty halves when the ensemble quadruples") {
  auto mean_sem = [](int m_runs) {
    const ScanTable sc = scan_map_mean(MapKind::param_cusp, 0.3, 0.7, 5, m_runs, 2000, 200, 3);
    double acc = 0.0;
    for (const auto& row : sc.rows) acc += row[0].sem;
    return acc / double(sc.rows.size());
  };
  const double ratio = mean_sem(16) / mean_sem(64);
  CHECK(ratio > 1.5);
  CHECK(ratio < 2.7);
}

TEST_CASE("scans are deterministic and validate their grid") {
  const ScanTable a = scan_map_mean(MapKind::tent, 0.2, 0.8, 4, 4, 500, 50, 9);
  const ScanTable b = scan_map_mean(MapKind::tent, 0.2, 0.8, 4, 4, 500, 50, 9);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i][0].mean == b.rows[i][0].mean);
    CHECK(a.rows[i][0].sem == b.rows[i][0].sem);
  }
  CHECK_THROWS_AS(scan_map_mean(MapKind::tent, 0.2, 0.8, 1, 4, 500, 50, 9), config_error);
  CHECK_THROWS_AS(scan_map_mean(MapKind::tent, 0.8, 0.2, 4, 4, 500, 50, 9), config_error);
}
