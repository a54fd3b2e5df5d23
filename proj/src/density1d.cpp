#include "chaosadj/density1d.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "chaosadj/errors.hpp"
#include "chaosadj/parallel.hpp"

namespace chaosadj {

std::vector<double> DiscreteDensity1D::nodes(int n) {
  std::vector<double> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = double(i) / double(n - 1);
  return y;
}

namespace {

// Linear interpolation weights of x on the uniform node grid.
struct InterpPair {
  int j;
  double t;  // weight t on node j+1, (1-t) on node j
};

InterpPair locate(double x, int n) {
  double pos = x * double(n - 1);
  int j = static_cast<int>(std::floor(pos));
  j = std::clamp(j, 0, n - 2);
  double t = std::clamp(pos - double(j), 0.0, 1.0);
  return {j, t};
}

double interp(const std::vector<double>& f, double x) {
  auto [j, t] = locate(x, static_cast<int>(f.size()));
  return (1.0 - t) * f[static_cast<std::size_t>(j)] + t * f[static_cast<std::size_t>(j) + 1];
}

// d/dy on the uniform grid: centered interior, one-sided first order ends.
// The integrand is only piecewise smooth in the outermost cells (branch
// preimages reach the domain ends and the peak there), and a wider one-sided
// stencil amplifies that cell-scale roughness enough to dominate the
// quadrature error, so the ends deliberately stay compact.
std::vector<double> grid_derivative(const std::vector<double>& g) {
  const int n = static_cast<int>(g.size());
  const double h = 1.0 / double(n - 1);
  std::vector<double> d(static_cast<std::size_t>(n));
  d[0] = (g[1] - g[0]) / h;
  for (int i = 1; i + 1 < n; ++i)
    d[static_cast<std::size_t>(i)] =
        (g[static_cast<std::size_t>(i) + 1] - g[static_cast<std::size_t>(i) - 1]) / (2.0 * h);
  d[static_cast<std::size_t>(n - 1)] =
      (g[static_cast<std::size_t>(n - 1)] - g[static_cast<std::size_t>(n - 2)]) / h;
  return d;
}

}  // namespace

SparseTransition build_fp_matrix(const Map1D& map, int n) {
  if (n < 16) throw config_error("transfer matrix needs at least 16 nodes");
  SparseTransition P(n);
  const double fp = map.peak_value();
  const double half_cell = 0.5 / double(n - 1);
  // Rows are independent (each worker writes only its own row), so the
  // assembly is identical for any thread count.
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t row) {
    int i = static_cast<int>(row);
    double y = double(i) / double(n - 1);
    if (y > fp) return;  // above the map maximum: no preimages, zero row
    for (Branch b : {Branch::left, Branch::right}) {
      double x = map.invert(y, b);
      // Slopes are taken at the true preimage; only a preimage landing on
      // the peak itself (to within inversion granularity) is represented by
      // the slope half a grid cell into its branch.
      double d = (std::abs(x - Map1D::peak_x) <= 1e-12)
                     ? map.slope_offside(Map1D::peak_x, b, half_cell)
                     : map.slope(x);
      double w = 1.0 / std::abs(d);
      auto [j, t] = locate(x, n);
      P.add(i, j, w * (1.0 - t));
      P.add(i, j + 1, w * t);
    }
  });
  if (P.max_row_entries() > 4)
    throw numerical_error("transfer matrix row exceeds two interpolation pairs");
  return P;
}

StationaryDensityResult stationary_density(const SparseTransition& P, int max_iters,
                                           double tol) {
  std::vector<double> start(static_cast<std::size_t>(P.size()), 1.0);
  PowerIterationResult r = power_iteration(P, false, std::move(start), max_iters, tol);
  P.lambda_hint = r.lambda;
  StationaryDensityResult out;
  out.density.values = std::move(r.vec);
  out.lambda = r.lambda;
  out.iterations = r.iterations;
  out.residual = r.residual;
  out.converged = r.converged;
  return out;
}

PowerIterationResult left_eigenvector(const SparseTransition& P, int max_iters, double tol) {
  std::vector<double> start(static_cast<std::size_t>(P.size()), 1.0);
  return power_iteration(P, true, std::move(start), max_iters, tol);
}

AdjointSolution1D solve_adjoint_1d(const SparseTransition& P,
                                   const std::vector<double>& rho_s,
                                   const std::vector<double>& v, double lambda,
                                   const std::vector<double>& J_values) {
  const int n = P.size();
  if (static_cast<int>(rho_s.size()) != n || static_cast<int>(v.size()) != n ||
      static_cast<int>(J_values.size()) != n)
    throw config_error("adjoint solve: inconsistent vector sizes");

  // Rescale v so that (1/n) rho_s^T v = 1; this pins eta to the discrete mean
  // of J without altering phi.
  double rv = 0.0;
  for (int i = 0; i < n; ++i)
    rv += rho_s[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
  rv /= double(n);
  if (!(std::abs(rv) > 1e-300)) throw numerical_error("degenerate left eigenvector scaling");

  using Trip = Eigen::Triplet<double>;
  std::vector<Trip> trips;
  trips.reserve(P.nonzeros() + 3 * static_cast<std::size_t>(n) + 1);
  for (int i = 0; i < n; ++i)
    for (const auto& e : P.row(i)) trips.emplace_back(e.col, i, e.w);  // P^T block
  for (int i = 0; i < n; ++i) {
    trips.emplace_back(i, i, -lambda);
    trips.emplace_back(i, n, -v[static_cast<std::size_t>(i)] / rv);
    trips.emplace_back(n, i, -rho_s[static_cast<std::size_t>(i)]);
  }

  Eigen::SparseMatrix<double> A(n + 1, n + 1);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();

  Eigen::VectorXd b(n + 1);
  for (int i = 0; i < n; ++i) b[i] = -J_values[static_cast<std::size_t>(i)];
  b[n] = 0.0;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw numerical_error("augmented adjoint system is singular");
  Eigen::VectorXd x = lu.solve(b);

  double res = (A * x - b).cwiseAbs().maxCoeff();
  if (!(res < 1e-9)) throw numerical_error("augmented adjoint solve residual too large");

  AdjointSolution1D out;
  out.phi.assign(x.data(), x.data() + n);
  out.eta = x[n];
  out.residual = res;
  return out;
}

double discrete_mean(const std::vector<double>& J_values, const std::vector<double>& rho) {
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) s += J_values[i] * rho[i];
  return s / double(rho.size());
}

double sensitivity_1d_custom(const Map1D& map, const std::vector<double>& rho_s,
                             const std::vector<double>& phi,
                             const std::function<double(double)>& dF_dxi) {
  const int n = static_cast<int>(rho_s.size());
  const double fp = map.peak_value();
  // Slopes at a peak preimage use the one-sided limit a tiny step into the
  // branch; for the singular-peak families 1/F' vanishes there.
  const double peak_eps = 1e-9;
  // g(y) = [P (rho dF/dxi)](y), summed over branch preimages.  The signed
  // slopes make termL - termR equal the |F'|-weighted branch sum.
  std::vector<double> g(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double y = double(i) / double(n - 1);
    if (y > fp) continue;
    double xL = map.invert(y, Branch::left);
    double xR = map.invert(y, Branch::right);
    double termL = interp(rho_s, xL) * dF_dxi(xL) / map.slope_offside(xL, Branch::left, peak_eps);
    double termR = interp(rho_s, xR) * dF_dxi(xR) / map.slope_offside(xR, Branch::right, peak_eps);
    g[static_cast<std::size_t>(i)] = termL - termR;
  }
  // d(Pn rho)/dxi = -dg/dy, so the gradient carries a leading minus sign.
  std::vector<double> dg = grid_derivative(g);
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    acc += phi[static_cast<std::size_t>(i)] * dg[static_cast<std::size_t>(i)];
  return -acc / double(n);
}

double sensitivity_1d(const Map1D& map, const std::vector<double>& rho_s,
                      const std::vector<double>& phi, bool use_symmetric_form) {
  if (!use_symmetric_form)
    return sensitivity_1d_custom(map, rho_s, phi,
                                 [&map](double x) { return map.param_derivative(x); });

  if (!map.symmetric_about_half())
    throw config_error("symmetric quadrature requires a map symmetric about 1/2");
  const int n = static_cast<int>(rho_s.size());
  const double fp = map.peak_value();
  std::vector<double> g(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double y = double(i) / double(n - 1);
    if (y > fp) continue;
    g[static_cast<std::size_t>(i)] =
        rho_s[static_cast<std::size_t>(i)] * map.param_derivative(map.invert(y, Branch::left));
  }
  std::vector<double> dg = grid_derivative(g);
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    acc += phi[static_cast<std::size_t>(i)] * dg[static_cast<std::size_t>(i)];
  return -acc / double(n);
}

FdSensitivity1D sensitivity_fd_1d(MapKind kind, double xi, int n, double delta_xi) {
  auto mean_at = [kind, n](double p) {
    SparseTransition P = build_fp_matrix(Map1D(kind, p), n);
    StationaryDensityResult s = stationary_density(P);
    if (!s.converged) throw numerical_error("stationary density did not converge");
    return discrete_mean(DiscreteDensity1D::nodes(n), s.density.values);
  };
  FdSensitivity1D out;
  out.base_mean = mean_at(xi);
  double plus = mean_at(xi + delta_xi);
  double minus = mean_at(xi - delta_xi);
  out.forward = (plus - out.base_mean) / delta_xi;
  out.centered = (plus - minus) / (2.0 * delta_xi);
  return out;
}

MapSensitivityRun map_sensitivity_run(MapKind kind, double xi, int n,
                                      const std::vector<double>& J_values) {
  Map1D map(kind, xi);
  SparseTransition P = build_fp_matrix(map, n);
  MapSensitivityRun run;
  run.stationary = stationary_density(P);
  if (!run.stationary.converged)
    throw numerical_error("stationary density did not converge");
  run.left = left_eigenvector(P);
  if (!run.left.converged) throw numerical_error("left eigenvector did not converge");
  std::vector<double> J = J_values.empty() ? DiscreteDensity1D::nodes(n) : J_values;
  // The gauge vector in the augmented solve is the constant function 1 (the
  // conservation functional, i.e. the left eigenvector of the exact transfer
  // operator).  Using the numerical left eigenvector of P_n instead would
  // differentiate J under the wrong normalization of rho_s and shift the
  // gradient away from the finite-difference answer.
  std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
  run.adjoint =
      solve_adjoint_1d(P, run.stationary.density.values, ones, run.stationary.lambda, J);
  run.gradient = sensitivity_1d(map, run.stationary.density.values, run.adjoint.phi);
  return run;
}

}  // namespace chaosadj
