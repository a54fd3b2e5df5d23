#pragma once

#include <functional>
#include <vector>

#include "chaosadj/attractor_mesh.hpp"
#include "chaosadj/dynsys.hpp"
#include "chaosadj/sparse_transition.hpp"

namespace chaosadj {

// In-surface contraction rate l^T J l + s^T J s at one mesh node.  Together
// with the off-surface rate n^T J n (n = l x s) it sums to the constant
// divergence of the flow.
double node_contraction(const OdeSystem& sys, const MeshNode& node);

// log(rho(T)/rho(0)) = -int_0^T (l^T J l + s^T J s) dt along one streamline,
// trapezoid quadrature on the N time-uniform nodes.
double density_log_ratio(const Streamline& line, const OdeSystem& sys);
// Same quadrature against an arbitrary Jacobian field.
double density_log_ratio(const Streamline& line,
                         const std::function<Mat3(const Vec3&)>& jacobian_at);

// exp(log ratio) for every streamline; parallel over lines, deterministic.
std::vector<double> density_ratios(const AttractorMesh& mesh);

// Crossing-flux weight per seed: D_i = |f(x0_i) x s0_i| * ds0_i.
std::vector<double> seed_flux_weights(const AttractorMesh& mesh);

// Normalization weights v_i = T_i * D_i; rho0^T v discretizes the statement
// that the attractor carries unit probability mass.
std::vector<double> normalization_weights(const AttractorMesh& mesh);

// Section transfer operator: the density arriving at seed j is the linear
// interpolation, at x_j, of the per-streamline arrival samples
// (return_x_i, ratio_i * rho_i) -- gathered independently from the
// same-quadrant and crossed-quadrant streamline families, so each row holds
// at most four entries (two bands).  Rows outside a family's return range
// take no contribution from it.  Throws numerical_error when any return_x
// leaves the arc domain by more than one edge cell.
SparseTransition build_section_operator(const AttractorMesh& mesh,
                                        const std::vector<double>& ratios);

struct SectionDensity {
  std::vector<double> rho0;  // stationary seed density, rho0^T v = 1
  std::vector<double> v;     // v_i = T_i * D_i
  std::vector<double> D;     // D_i = |f0 x s0| * ds0_i
  double lambda = 0.0;       // leading eigenvalue (near, but not exactly, 1)
  int iterations = 0;
  double residual = 0.0;     // ||P rho0 - lambda rho0||_inf / ||rho0||_inf
  bool converged = false;
};

// Leading right eigenvector of P by power iteration, optionally smoothed by
// a centered moving average of odd width (0 or 1 = off), then rescaled so
// rho0^T v = 1.
SectionDensity poincare_density(const AttractorMesh& mesh, const SparseTransition& P,
                                int filter_width = 0);

// A scalar sampled on every mesh node, row-major per streamline.
struct SurfaceField {
  int M = 0;
  int N = 0;
  std::vector<double> values;

  SurfaceField() = default;
  SurfaceField(int m, int n) : M(m), N(n), values(static_cast<std::size_t>(m) * n, 0.0) {}
  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * N + j]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * N + j]; }
};

// Stationary density over the whole surface: along each streamline the log
// density accumulates the same trapezoid increments as density_log_ratio,
// starting from rho0_i (a classical RK4 update of the log variable on the
// node grid reduces to exactly this trapezoid once the midpoint contraction
// is the average of the node values).
SurfaceField surface_density(const AttractorMesh& mesh, const SectionDensity& sd);

// int_0^T J(x(t)) dt along one streamline, trapezoid on the node grid.
double streamline_time_integral(const Streamline& line,
                                const std::function<double(const Vec3&)>& J);

// Long-time average of J over the attractor: sum_i int J dt * D_i * rho0_i.
double mean_quantity(const AttractorMesh& mesh, const SectionDensity& sd,
                     const std::function<double(const Vec3&)>& J);

}  // namespace chaosadj
