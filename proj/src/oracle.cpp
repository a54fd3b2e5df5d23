#include "chaosadj/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "chaosadj/errors.hpp"
#include "chaosadj/rng.hpp"

namespace chaosadj {

RegressionResult regression_line(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  if (n != static_cast<int>(y.size()) || n < 3)
    throw config_error("regression needs at least three matched samples");
  double xm = 0.0, ym = 0.0;
  for (int i = 0; i < n; ++i) {
    xm += x[i];
    ym += y[i];
  }
  xm /= double(n);
  ym /= double(n);
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  if (sxx <= 0.0) throw config_error("regression abscissae are degenerate");

  RegressionResult out;
  out.slope = sxy / sxx;
  out.intercept = ym - out.slope * xm;
  double ssr = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - (out.intercept + out.slope * x[i]);
    ssr += r * r;
  }
  out.sigma3 = 3.0 * std::sqrt(ssr / double(n - 2) / sxx);
  return out;
}

RegressionResult regression_sensitivity(
    const std::function<MeanEstimate(double, std::uint64_t)>& sampler, double center,
    double halfwidth, int n_values, std::uint64_t seed) {
  if (n_values < 5) throw config_error("parameter sweep needs at least five values");
  if (halfwidth <= 0.0) throw config_error("parameter window must have positive width");

  std::vector<double> params(static_cast<std::size_t>(n_values));
  std::vector<MeanEstimate> samples(static_cast<std::size_t>(n_values));
  for (int i = 0; i < n_values; ++i) {
    const double t = (n_values == 1) ? 0.0 : 2.0 * double(i) / double(n_values - 1) - 1.0;
    params[static_cast<std::size_t>(i)] = center + halfwidth * t;
    samples[static_cast<std::size_t>(i)] =
        sampler(params[static_cast<std::size_t>(i)],
                derive_seed(seed, static_cast<std::uint64_t>(i)));
  }
  std::vector<double> means(samples.size());
  std::transform(samples.begin(), samples.end(), means.begin(),
                 [](const MeanEstimate& m) { return m.mean; });
  RegressionResult out = regression_line(params, means);
  out.params = std::move(params);
  out.samples = std::move(samples);
  return out;
}

RegressionResult regression_sensitivity(const OdeSystem& sys, const std::string& param,
                                        const std::function<double(const Vec3&)>& J,
                                        double center, double halfwidth, int n_values,
                                        int runs_per_value, double t_avg, double t_spinup,
                                        std::uint64_t seed) {
  sys.parameter(param);  // validate the name up front
  auto sampler = [&](double value, std::uint64_t s) {
    return ensemble_mean(sys.with_parameter(param, value), J, runs_per_value, t_avg,
                         t_spinup, s);
  };
  return regression_sensitivity(sampler, center, halfwidth, n_values, seed);
}

double default_regression_halfwidth(const std::string& param) {
  return param == "b" ? 0.2 : 1.0;
}

Histogram1D histogram_density(const Map1D& map, int bins, long n_steps, long spinup,
                              int m_runs, std::uint64_t seed) {
  if (bins < 32) throw config_error("histogram needs at least 32 bins");
  if (m_runs < 1 || n_steps < 1 || spinup < 0)
    throw config_error("histogram ensemble sizes must be positive (spinup nonnegative)");

  Histogram1D out;
  out.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i)
    out.edges[static_cast<std::size_t>(i)] = double(i) / double(bins);
  out.counts.assign(static_cast<std::size_t>(bins), 0);

  for (int run = 0; run < m_runs; ++run) {
    Rng gen(derive_seed(seed, static_cast<std::uint64_t>(run)));
    double x = uniform(gen, 0.25, 0.75);
    for (long i = 0; i < spinup; ++i) x = dithered_step(map, x, gen);
    for (long i = 0; i < n_steps; ++i) {
      const int b = std::min(bins - 1, static_cast<int>(x * double(bins)));
      ++out.counts[static_cast<std::size_t>(b)];
      x = dithered_step(map, x, gen);
    }
  }
  out.total = static_cast<long>(m_runs) * n_steps;
  out.density.resize(static_cast<std::size_t>(bins));
  const double width = 1.0 / double(bins);
  for (int i = 0; i < bins; ++i)
    out.density[static_cast<std::size_t>(i)] =
        double(out.counts[static_cast<std::size_t>(i)]) / (double(out.total) * width);
  return out;
}

Histogram2D histogram_density(const OdeSystem& sys, int axis_a, int axis_b, int bins,
                              double t_total, double t_spinup, std::uint64_t seed) {
  if (bins < 32) throw config_error("histogram needs at least 32 bins");
  if (axis_a < 0 || axis_a > 2 || axis_b < 0 || axis_b > 2 || axis_a == axis_b)
    throw config_error("projection axes must be two distinct state components");
  if (t_total <= 0.0 || t_spinup < 0.0)
    throw config_error("histogram times must be positive (spinup nonnegative)");

  const double dt = 0.01;
  Rng gen(derive_seed(seed, 0));
  Vec3 x = {1.0 + uniform(gen, -0.1, 0.1), 1.0 + uniform(gen, -0.1, 0.1),
            sys.z0 + 1.0 + uniform(gen, -0.1, 0.1)};
  const long n_spin = static_cast<long>(std::llround(t_spinup / dt));
  const long n_keep = static_cast<long>(std::llround(t_total / dt));
  for (long i = 0; i < n_spin; ++i) x = rk4_step(sys, x, dt);

  std::vector<Vec3> samples(static_cast<std::size_t>(n_keep));
  for (long i = 0; i < n_keep; ++i) {
    samples[static_cast<std::size_t>(i)] = x;
    x = rk4_step(sys, x, dt);
  }

  Histogram2D out;
  out.axis_a = axis_a;
  out.axis_b = axis_b;
  out.bins = bins;
  out.a_min = out.a_max = samples[0][static_cast<std::size_t>(axis_a)];
  out.b_min = out.b_max = samples[0][static_cast<std::size_t>(axis_b)];
  for (const Vec3& p : samples) {
    out.a_min = std::min(out.a_min, p[static_cast<std::size_t>(axis_a)]);
    out.a_max = std::max(out.a_max, p[static_cast<std::size_t>(axis_a)]);
    out.b_min = std::min(out.b_min, p[static_cast<std::size_t>(axis_b)]);
    out.b_max = std::max(out.b_max, p[static_cast<std::size_t>(axis_b)]);
  }
  const double aw = out.a_max - out.a_min;
  const double bw = out.b_max - out.b_min;
  if (aw <= 0.0 || bw <= 0.0) throw numerical_error("orbit projection has zero extent");

  out.counts.assign(static_cast<std::size_t>(bins) * bins, 0);
  for (const Vec3& p : samples) {
    const int ia = std::min(
        bins - 1, static_cast<int>((p[static_cast<std::size_t>(axis_a)] - out.a_min) / aw *
                                   double(bins)));
    const int ib = std::min(
        bins - 1, static_cast<int>((p[static_cast<std::size_t>(axis_b)] - out.b_min) / bw *
                                   double(bins)));
    ++out.count(ia, ib);
  }
  out.total = n_keep;
  const double cell = (aw / double(bins)) * (bw / double(bins));
  out.density.resize(out.counts.size());
  for (std::size_t i = 0; i < out.counts.size(); ++i)
    out.density[i] = double(out.counts[i]) / (double(out.total) * cell);
  return out;
}

namespace {

ScanTable scan_core(std::string parameter_name, std::vector<std::string> observables,
                    double lo, double hi, int n_points,
                    const std::function<std::vector<MeanEstimate>(double, std::uint64_t)>&
                        sample_all,
                    std::uint64_t seed) {
  if (n_points < 2) throw config_error("parameter scan needs at least two grid points");
  if (!(hi > lo)) throw config_error("parameter scan window must have positive width");
  ScanTable out;
  out.parameter_name = std::move(parameter_name);
  out.observables = std::move(observables);
  out.parameter.resize(static_cast<std::size_t>(n_points));
  out.rows.resize(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    const double v = lo + (hi - lo) * double(i) / double(n_points - 1);
    out.parameter[static_cast<std::size_t>(i)] = v;
    out.rows[static_cast<std::size_t>(i)] =
        sample_all(v, derive_seed(seed, static_cast<std::uint64_t>(i)));
  }
  return out;
}

}  // namespace

ScanTable scan_map_mean(MapKind family, double xi_lo, double xi_hi, int n_points,
                        int m_runs, long n_steps, long spinup, std::uint64_t seed) {
  auto sample = [&](double xi, std::uint64_t s) {
    const Map1D map(family, xi);
    return std::vector<MeanEstimate>{
        ensemble_mean(map, [](double x) { return x; }, m_runs, n_steps, spinup, s)};
  };
  return scan_core("xi", {"xbar"}, xi_lo, xi_hi, n_points, sample, seed);
}

ScanTable scan_lorenz_vs_r(double r_lo, double r_hi, int n_points, int m_runs, double t_avg,
                           double t_spinup, std::uint64_t seed) {
  auto sample = [&](double r, std::uint64_t s) {
    const OdeSystem sys = OdeSystem::lorenz(10.0, r, 8.0 / 3.0, 0.0);
    return std::vector<MeanEstimate>{
        ensemble_mean(sys, [](const Vec3& x) { return x[2]; }, m_runs, t_avg, t_spinup, s),
        ensemble_mean(sys, [](const Vec3& x) { return x[0] * x[0]; }, m_runs, t_avg,
                      t_spinup, derive_seed(s, 1))};
  };
  return scan_core("r", {"zbar", "x2bar"}, r_lo, r_hi, n_points, sample, seed);
}

ScanTable scan_rossler_vs_c(double c_lo, double c_hi, int n_points, int m_runs, double t_avg,
                            double t_spinup, std::uint64_t seed) {
  auto sample = [&](double c, std::uint64_t s) {
    const OdeSystem sys = OdeSystem::rossler(0.1, 0.1, c);
    return std::vector<MeanEstimate>{
        ensemble_mean(sys, [](const Vec3& x) { return x[0]; }, m_runs, t_avg, t_spinup, s),
        ensemble_mean(sys, [](const Vec3& x) { return x[2]; }, m_runs, t_avg, t_spinup,
                      derive_seed(s, 1))};
  };
  return scan_core("c", {"xbar", "zbar"}, c_lo, c_hi, n_points, sample, seed);
}

}  // namespace chaosadj
