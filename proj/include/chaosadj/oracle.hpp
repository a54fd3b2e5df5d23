#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "chaosadj/dynsys.hpp"
#include "chaosadj/maps1d.hpp"

namespace chaosadj {

// Least-squares line through (x, y) samples with the slope's standard error
// estimated from the fit residuals.
struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double sigma3 = 0.0;  // 3x the standard error of the slope
  std::vector<double> params;         // sampled parameter values
  std::vector<MeanEstimate> samples;  // ensemble mean at each parameter value
};

RegressionResult regression_line(const std::vector<double>& x, const std::vector<double>& y);

// Sensitivity of an ensemble-averaged quantity to a parameter, measured the
// model-free way: evaluate the ensemble mean at n_values parameter samples
// spaced evenly across [center - halfwidth, center + halfwidth] and fit a
// least-squares line.  Returns the slope and a 3-standard-error band.
// `sampler(value, seed)` produces the mean estimate at one parameter value;
// per-value seeds derive deterministically from `seed`.
RegressionResult regression_sensitivity(
    const std::function<MeanEstimate(double, std::uint64_t)>& sampler, double center,
    double halfwidth, int n_values, std::uint64_t seed);

// The same, with the sampler built from an ODE ensemble average of J.
RegressionResult regression_sensitivity(const OdeSystem& sys, const std::string& param,
                                        const std::function<double(const Vec3&)>& J,
                                        double center, double halfwidth, int n_values,
                                        int runs_per_value, double t_avg, double t_spinup,
                                        std::uint64_t seed);

// Parameter window half-width sized so the regression band is narrow enough
// to discriminate adjoint results: 0.2 for the contraction parameter b, 1.0
// for the others.
double default_regression_halfwidth(const std::string& param);

// Occupation histogram of a map orbit ensemble on [0,1].
struct Histogram1D {
  std::vector<double> edges;    // bins + 1 uniform edges on [0, 1]
  std::vector<long> counts;     // per-bin visit counts
  std::vector<double> density;  // counts / (total * bin width); integrates to 1
  long total = 0;
};

Histogram1D histogram_density(const Map1D& map, int bins, long n_steps, long spinup,
                              int m_runs, std::uint64_t seed);

// Occupation histogram of one ODE orbit projected onto two state axes.
struct Histogram2D {
  int axis_a = 0;
  int axis_b = 2;
  int bins = 0;
  double a_min = 0.0, a_max = 0.0;
  double b_min = 0.0, b_max = 0.0;
  std::vector<long> counts;     // bins x bins, row-major in axis_a
  std::vector<double> density;  // counts / (total * cell area); integrates to 1
  long total = 0;

  long& count(int ia, int ib) { return counts[static_cast<std::size_t>(ia) * bins + ib]; }
  double dens(int ia, int ib) const {
    return density[static_cast<std::size_t>(ia) * bins + ib];
  }
};

Histogram2D histogram_density(const OdeSystem& sys, int axis_a, int axis_b, int bins,
                              double t_total, double t_spinup, std::uint64_t seed);

// Ensemble-averaged mean quantities swept across a parameter grid: the
// direct-simulation picture of how smoothly long-time averages respond to a
// parameter.
struct ScanTable {
  std::string parameter_name;
  std::vector<std::string> observables;
  std::vector<double> parameter;                // n_points values
  std::vector<std::vector<MeanEstimate>> rows;  // n_points x observables
};

// Mean of x for one map family as xi varies.
ScanTable scan_map_mean(MapKind family, double xi_lo, double xi_hi, int n_points,
                        int m_runs, long n_steps, long spinup, std::uint64_t seed);

// Mean of z and of x^2 for the Lorenz attractor as r varies (x and y average
// to zero by symmetry).
ScanTable scan_lorenz_vs_r(double r_lo, double r_hi, int n_points, int m_runs, double t_avg,
                           double t_spinup, std::uint64_t seed);

// Mean of x and of z for the Rossler attractor as c varies.
ScanTable scan_rossler_vs_c(double c_lo, double c_hi, int n_points, int m_runs, double t_avg,
                            double t_spinup, std::uint64_t seed);

}  // namespace chaosadj
