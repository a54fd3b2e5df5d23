#pragma once

#include <functional>
#include <vector>

#include "chaosadj/maps1d.hpp"
#include "chaosadj/sparse_transition.hpp"

namespace chaosadj {

// Density samples at the n uniform nodes y_i = i/(n-1), normalized so that
// (1/n) sum_i rho_i = 1.
struct DiscreteDensity1D {
  std::vector<double> values;
  int n() const { return static_cast<int>(values.size()); }
  static std::vector<double> nodes(int n);
};

struct StationaryDensityResult {
  DiscreteDensity1D density;
  double lambda = 0.0;  // leading eigenvalue; close to 1 but not exactly 1
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

struct AdjointSolution1D {
  std::vector<double> phi;  // adjoint density, orthogonal to the stationary density
  double eta = 0.0;         // recovered mean of J; matches (1/n) J^T rho_s
  double residual = 0.0;    // max-norm residual of the augmented solve
};

// Discretized transfer operator of the map on n nodes.  Row i carries
//   rho_{k+1}(y_i) = rho_k(xL)/|F'(xL)| + rho_k(xR)/|F'(xR)|
// with the branch preimages xL, xR of y_i and rho at a preimage linearly
// interpolated between its two bracketing nodes, giving at most four entries
// per row.  Slopes are never evaluated exactly at the peak: a preimage landing
// there is nudged half a grid cell toward its branch.  Rows whose y_i exceeds
// the map's maximum are zero.
SparseTransition build_fp_matrix(const Map1D& map, int n);

// Leading right eigenvector by power iteration, rescaled to mean 1 each step.
StationaryDensityResult stationary_density(const SparseTransition& P,
                                           int max_iters = 512, double tol = 1e-12);

// Leading left eigenvector, scaled so its mean is 1.
PowerIterationResult left_eigenvector(const SparseTransition& P,
                                      int max_iters = 2048, double tol = 1e-13);

// Solves the augmented adjoint system
//   [ P^T - lambda I   -v  ] [ phi ]   [ -J ]
//   [    -rho_s^T       0  ] [ eta ] = [  0 ]
// where v is rescaled internally so that (1/n) rho_s^T v = 1; eta then equals
// the discrete mean (1/n) J^T rho_s up to solver tolerance.
AdjointSolution1D solve_adjoint_1d(const SparseTransition& P,
                                   const std::vector<double>& rho_s,
                                   const std::vector<double>& v, double lambda,
                                   const std::vector<double>& J_values);

// Parameter gradient of the stationary mean of J.  The transfer operator
// responds to the parameter through d(P rho)/dxi = -d/dy [P(rho dF/dxi)](y),
// so with g(y) = [P(rho_s dF/dxi)](y), written with signed branch slopes as
//   g(y) = rho_s(xL)/F'(xL) dF/dxi(xL) - rho_s(xR)/F'(xR) dF/dxi(xR),
// the gradient is
//   d(Jbar)/dxi = -(1/n) sum_i phi_i (dg/dy)_i,
// with dg/dy from second-order centered differences (one-sided at the ends).
// With use_symmetric_form the equivalent g(y) = rho_s(y) dF/dxi(F^{-1}(y)) is
// used instead (it equals the branch sum because rho_s is stationary); valid
// only for maps symmetric about 1/2.
double sensitivity_1d(const Map1D& map, const std::vector<double>& rho_s,
                      const std::vector<double>& phi,
                      bool use_symmetric_form = false);

// Same quadrature with dF/dxi replaced by an arbitrary function of x.
double sensitivity_1d_custom(const Map1D& map, const std::vector<double>& rho_s,
                             const std::vector<double>& phi,
                             const std::function<double(double)>& dF_dxi);

// (1/n) J^T rho.
double discrete_mean(const std::vector<double>& J_values, const std::vector<double>& rho);

// Finite-difference oracle for the same gradient, built from independent
// stationary-density solves at perturbed parameters.
struct FdSensitivity1D {
  double forward = 0.0;
  double centered = 0.0;
  double base_mean = 0.0;
};
FdSensitivity1D sensitivity_fd_1d(MapKind kind, double xi, int n, double delta_xi);

// Full adjoint pipeline for one map configuration; J defaults to J(y) = y.
struct MapSensitivityRun {
  StationaryDensityResult stationary;
  PowerIterationResult left;
  AdjointSolution1D adjoint;
  double gradient = 0.0;
};
MapSensitivityRun map_sensitivity_run(MapKind kind, double xi, int n,
                                      const std::vector<double>& J_values = {});

}  // namespace chaosadj
