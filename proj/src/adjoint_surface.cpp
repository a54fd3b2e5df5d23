#include "chaosadj/adjoint_surface.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "chaosadj/errors.hpp"
#include "chaosadj/parallel.hpp"

namespace chaosadj {

double streamline_objective(const Streamline& line,
                            const std::function<double(const Vec3&)>& J) {
  return streamline_time_integral(line, J);
}

SectionAdjoint solve_section_adjoint(const SparseTransition& P, const std::vector<double>& D,
                                     const std::vector<double>& v,
                                     const std::vector<double>& rho0,
                                     const std::vector<double>& J_objective, double lambda) {
  const int M = P.size();
  const auto m = static_cast<std::size_t>(M);
  if (D.size() != m || v.size() != m || rho0.size() != m || J_objective.size() != m)
    throw config_error("section adjoint inputs do not share the operator size");

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(P.nonzeros() + 3 * m);
  // (D^-1 P^T D)_{c,r} = P_{r,c} D_r / D_c
  for (int r = 0; r < M; ++r)
    for (const auto& e : P.row(r))
      triplets.emplace_back(e.col, r, e.w * D[static_cast<std::size_t>(r)] /
                                          D[static_cast<std::size_t>(e.col)]);
  for (int i = 0; i < M; ++i) {
    triplets.emplace_back(i, i, -lambda);
    // D^-1 v reduces to the return time
    triplets.emplace_back(i, M, v[static_cast<std::size_t>(i)] / D[static_cast<std::size_t>(i)]);
    const double q = rho0[static_cast<std::size_t>(i)] * D[static_cast<std::size_t>(i)];
    if (q != 0.0) triplets.emplace_back(M, i, q);
  }

  Eigen::SparseMatrix<double> K(M + 1, M + 1);
  K.setFromTriplets(triplets.begin(), triplets.end());
  K.makeCompressed();

  Eigen::VectorXd b = Eigen::VectorXd::Zero(M + 1);
  for (int i = 0; i < M; ++i) b[i] = J_objective[static_cast<std::size_t>(i)];

  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.compute(K);
  if (solver.info() != Eigen::Success)
    throw numerical_error("section adjoint system is singular");
  const Eigen::VectorXd x = solver.solve(b);
  if (solver.info() != Eigen::Success)
    throw numerical_error("section adjoint solve failed");

  const double scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
  const double residual = (K * x - b).lpNorm<Eigen::Infinity>() / scale;
  if (!(residual < 1e-9))
    throw numerical_error("section adjoint residual " + std::to_string(residual) +
                          " exceeds 1e-9");

  SectionAdjoint adj;
  adj.phi0.assign(x.data(), x.data() + M);
  adj.Jbar = x[M];
  adj.residual = residual;
  return adj;
}

SurfaceField surface_adjoint(const AttractorMesh& mesh, const SectionAdjoint& adj,
                             const std::function<double(const Vec3&)>& J) {
  const int M = mesh.M();
  if (adj.phi0.size() != static_cast<std::size_t>(M))
    throw config_error("section adjoint size does not match the mesh");
  SurfaceField field(M, mesh.N);
  parallel_for(static_cast<std::size_t>(M), [&](std::size_t u) {
    const int i = static_cast<int>(u);
    const Streamline& ln = mesh.lines[u];
    const int N = static_cast<int>(ln.nodes.size());
    const double h = ln.T / (N - 1);
    double phi = adj.phi0[u];
    field.at(i, 0) = phi;
    double prev = J(ln.nodes.front().pos) - adj.Jbar;
    for (int j = 1; j < N; ++j) {
      const double cur = J(ln.nodes[static_cast<std::size_t>(j)].pos) - adj.Jbar;
      phi += 0.5 * h * (prev + cur);
      field.at(i, j) = phi;
      prev = cur;
    }
  });
  return field;
}

NodeAreas node_areas(const AttractorMesh& mesh, const SurfaceField& rho_surface,
                     const SectionDensity& sd) {
  const int M = mesh.M();
  const int N = mesh.N;
  if (rho_surface.M != M || rho_surface.N != N || sd.rho0.size() != static_cast<std::size_t>(M))
    throw config_error("density fields do not match the mesh");

  NodeAreas areas;
  areas.dA = SurfaceField(M, N);
  areas.line_area.assign(static_cast<std::size_t>(M), 0.0);
  parallel_for(static_cast<std::size_t>(M), [&](std::size_t u) {
    const int i = static_cast<int>(u);
    const Streamline& ln = mesh.lines[u];
    const double q = sd.rho0[u] * sd.D[u];  // rho0 |f0 x s0| ds0, constant along the line
    if (sd.rho0[u] == 0.0) return;          // massless line: zero area by convention
    const double h = ln.T / (N - 1);

    // dA/dt = q / rho, with rho (hence the integrand) piecewise linear in t
    std::vector<double> g(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
      const double rho = rho_surface.at(i, j);
      if (!(rho > 0.0))
        throw numerical_error("surface density vanishes on a streamline with positive seed mass");
      g[static_cast<std::size_t>(j)] = q / rho;
    }
    // cumulative area at the nodes and at the inter-node midpoints
    std::vector<double> A(static_cast<std::size_t>(N), 0.0);
    for (int j = 1; j < N; ++j)
      A[static_cast<std::size_t>(j)] = A[static_cast<std::size_t>(j - 1)] +
                                       0.5 * h * (g[static_cast<std::size_t>(j - 1)] +
                                                  g[static_cast<std::size_t>(j)]);
    const auto mid = [&](int k) {
      // integral of the linear interpolant over [t_k, t_k + h/2]
      return A[static_cast<std::size_t>(k)] +
             (h / 8.0) * (3.0 * g[static_cast<std::size_t>(k)] + g[static_cast<std::size_t>(k + 1)]);
    };
    areas.dA.at(i, 0) = mid(0);
    for (int k = 1; k + 1 < N; ++k) areas.dA.at(i, k) = mid(k) - mid(k - 1);
    areas.dA.at(i, N - 1) = A[static_cast<std::size_t>(N - 1)] - mid(N - 2);
    areas.line_area[u] = A[static_cast<std::size_t>(N - 1)];
  });
  return areas;
}

VectorField parameter_velocity_field(const AttractorMesh& mesh, const std::string& parameter) {
  const OdeSystem& sys = mesh.sys;
  std::function<Vec3(const Vec3&)> dfdxi;
  if (sys.kind == OdeKind::lorenz) {
    if (parameter == "s")
      dfdxi = [](const Vec3& p) { return Vec3{p[1] - p[0], 0.0, 0.0}; };
    else if (parameter == "r")
      dfdxi = [](const Vec3& p) { return Vec3{0.0, p[0], 0.0}; };
    else if (parameter == "b")
      dfdxi = [&sys](const Vec3& p) { return Vec3{0.0, 0.0, -(p[2] - sys.z0)}; };
    else if (parameter == "z0")
      dfdxi = [&sys](const Vec3& p) { return Vec3{0.0, p[0], sys.b}; };
  } else {
    if (parameter == "a")
      dfdxi = [](const Vec3& p) { return Vec3{0.0, p[1], 0.0}; };
    else if (parameter == "b")
      dfdxi = [](const Vec3&) { return Vec3{0.0, 0.0, 1.0}; };
    else if (parameter == "c")
      dfdxi = [](const Vec3& p) { return Vec3{0.0, 0.0, -p[2]}; };
  }
  if (!dfdxi) throw config_error("unknown parameter '" + parameter + "' for this flow family");

  VectorField field(mesh.M(), mesh.N);
  parallel_for(static_cast<std::size_t>(mesh.M()), [&](std::size_t u) {
    const int i = static_cast<int>(u);
    for (int j = 0; j < mesh.N; ++j)
      field.at(i, j) = dfdxi(mesh.lines[u].nodes[static_cast<std::size_t>(j)].pos);
  });
  return field;
}

namespace {

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

}  // namespace

SurfaceField surface_divergence(const AttractorMesh& mesh, const VectorField& X) {
  const int M = mesh.M();
  const int N = mesh.N;
  if (X.M != M || X.N != N) throw config_error("vector field does not match the mesh");

  SurfaceField div(M, N);
  parallel_for(static_cast<std::size_t>(M), [&](std::size_t u) {
    const int i = static_cast<int>(u);
    const Streamline& ln = mesh.lines[u];
    const double h = ln.T / (N - 1);

    // same-quadrant neighbors only: across the branch seam (and at the mesh
    // edges) the stencil is one-sided
    const bool fwd_ok = i + 1 < M && mesh.lines[u + 1].return_quadrant == ln.return_quadrant;
    const bool bwd_ok = i - 1 >= 0 && mesh.lines[u - 1].return_quadrant == ln.return_quadrant;
    if (!fwd_ok && !bwd_ok)
      throw numerical_error("streamline has no same-branch neighbor for spanwise differencing");

    for (int j = 0; j < N; ++j) {
      const MeshNode& nd = ln.nodes[static_cast<std::size_t>(j)];

      // streamwise derivative: time differencing converted to arclength
      Vec3 dXdl;
      if (j == 0)
        dXdl = sub(X.at(i, 1), X.at(i, 0));
      else if (j == N - 1)
        dXdl = sub(X.at(i, N - 1), X.at(i, N - 2));
      else
        dXdl = sub(X.at(i, j + 1), X.at(i, j - 1));
      const double dl = (j == 0 || j == N - 1 ? h : 2.0 * h) * nd.speed;
      for (double& c : dXdl) c /= dl;

      // spanwise derivative via the alpha/beta projection
      Vec3 dXds{0.0, 0.0, 0.0};
      int stencils = 0;
      for (const int other : {fwd_ok ? i + 1 : -1, bwd_ok ? i - 1 : -1}) {
        if (other < 0) continue;
        const MeshNode& nb = mesh.lines[static_cast<std::size_t>(other)]
                                 .nodes[static_cast<std::size_t>(j)];
        const bool forward = other > i;
        const Vec3 sep = forward ? sub(nb.pos, nd.pos) : sub(nd.pos, nb.pos);
        const Vec3 dX = forward ? sub(X.at(other, j), X.at(i, j)) : sub(X.at(i, j), X.at(other, j));
        const double alpha = dot3(sep, nd.l_hat);
        const double beta = dot3(sep, nd.s_hat);
        if (std::abs(beta) < 1e-10)
          throw numerical_error("spanwise separation aligned with the flow (degenerate projection)");
        for (int c = 0; c < 3; ++c) dXds[c] += (dX[c] - alpha * dXdl[c]) / beta;
        ++stencils;
      }
      for (double& c : dXds) c /= stencils;

      div.at(i, j) = dot3(nd.l_hat, dXdl) + dot3(nd.s_hat, dXds);
    }
  });
  return div;
}

double sensitivity(const AttractorMesh& mesh, const SurfaceField& phi, const SurfaceField& rho,
                   const NodeAreas& areas, const VectorField& dfdxi) {
  const int M = mesh.M();
  const int N = mesh.N;
  if (phi.M != M || phi.N != N || rho.M != M || rho.N != N || areas.dA.M != M ||
      areas.dA.N != N || dfdxi.M != M || dfdxi.N != N)
    throw config_error("sensitivity fields do not match the mesh");

  VectorField X(M, N);
  parallel_for(static_cast<std::size_t>(M), [&](std::size_t u) {
    const int i = static_cast<int>(u);
    for (int j = 0; j < N; ++j) {
      const double r = rho.at(i, j);
      const Vec3& d = dfdxi.at(i, j);
      X.at(i, j) = Vec3{r * d[0], r * d[1], r * d[2]};
    }
  });
  const SurfaceField div = surface_divergence(mesh, X);

  double total = 0.0;
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < N; ++j) total += phi.at(i, j) * div.at(i, j) * areas.dA.at(i, j);
  return total;
}

namespace {

// Per-line single-return quantities of the reduced model at one parameter
// value, plus the base-density image psi^T P rho and the side's own mean.
struct ModelSide {
  std::vector<double> Jline;
  std::vector<double> T;
  std::vector<double> D0;
  std::vector<int> quadrant;
  double psi_P_rho = 0.0;
  double mean = 0.0;
};

ModelSide evaluate_model_side(const OdeSystem& sys, const AttractorMesh& base,
                              const std::vector<double>& psi, const std::vector<double>& rho,
                              const std::function<double(const Vec3&)>& J) {
  SectionFit fit = base.fit;
  fit.plane_z = sys.section_z();

  AttractorMesh side;
  side.sys = sys;
  side.fit = fit;
  side.N = base.N;
  side.seeds = base.seeds;
  const int M = base.M();
  for (int i = 0; i < M; ++i) side.seeds.start[i] = fit.point(side.seeds.x[i]);
  side.lines.resize(M);
  parallel_for(static_cast<std::size_t>(M), [&](std::size_t u) {
    const int i = static_cast<int>(u);
    const int nb = (i + 1 < M) ? i + 1 : i - 1;
    side.lines[i] = trace_streamline(sys, side.seeds.start[i], side.N,
                                     side.seeds.start[nb], fit);
    side.lines[i].ds0 = side.seeds.ds0[i];
  });

  ModelSide out;
  out.Jline.resize(M);
  out.T.resize(M);
  out.D0.resize(M);
  out.quadrant.resize(M);
  for (int i = 0; i < M; ++i) {
    out.Jline[i] = streamline_time_integral(side.lines[i], J);
    out.T[i] = side.lines[i].T;
    out.D0[i] = side.lines[i].nodes[0].speed * side.lines[i].ds0;
    out.quadrant[i] = side.lines[i].return_quadrant == ReturnQuadrant::first ? 0 : 1;
  }

  const std::vector<double> ratios = density_ratios(side);
  const SparseTransition P = build_section_operator(side, ratios);
  const std::vector<double> P_rho = P.apply(rho);
  for (int i = 0; i < M; ++i) out.psi_P_rho += psi[i] * P_rho[i];

  const SectionDensity side_density = poincare_density(side, P);
  out.mean = mean_quantity(side, side_density, J);
  return out;
}

}  // namespace

ModelSensitivity model_sensitivity(const AttractorMesh& mesh, const SectionDensity& dens,
                                   const SectionAdjoint& adj,
                                   const std::function<double(const Vec3&)>& J,
                                   const std::string& parameter, double delta) {
  const int M = mesh.M();
  if (static_cast<int>(dens.rho0.size()) != M || static_cast<int>(adj.phi0.size()) != M)
    throw config_error("model sensitivity inputs do not match the mesh");
  if (!(delta > 0.0)) throw config_error("model sensitivity requires a positive delta");

  const double base_value = mesh.sys.parameter(parameter);
  std::vector<double> psi(M);
  for (int i = 0; i < M; ++i) psi[i] = dens.D[i] * adj.phi0[i];

  const ModelSide plus =
      evaluate_model_side(mesh.sys.with_parameter(parameter, base_value + delta), mesh,
                          psi, dens.rho0, J);
  const ModelSide minus =
      evaluate_model_side(mesh.sys.with_parameter(parameter, base_value - delta), mesh,
                          psi, dens.rho0, J);

  ModelSensitivity out;
  out.delta = delta;
  out.value = (plus.mean - minus.mean) / (2.0 * delta);

  double line_sum = 0.0;
  for (int i = 0; i < M; ++i) {
    const int base_quadrant =
        mesh.lines[i].return_quadrant == ReturnQuadrant::first ? 0 : 1;
    if (plus.quadrant[i] != minus.quadrant[i] || plus.quadrant[i] != base_quadrant) {
      ++out.flipped_lines;
      continue;
    }
    const double dJ = (plus.Jline[i] - minus.Jline[i]) / (2.0 * delta);
    const double dT = (plus.T[i] - minus.T[i]) / (2.0 * delta);
    const double dD = (plus.D0[i] - minus.D0[i]) / (2.0 * delta);
    const double J_i = streamline_time_integral(mesh.lines[i], J);
    line_sum += dens.rho0[i] * (dens.D[i] * (dJ - adj.Jbar * dT) +
                                dD * (J_i - adj.Jbar * mesh.lines[i].T));
  }
  const double dP_term = (plus.psi_P_rho - minus.psi_P_rho) / (2.0 * delta);
  out.adjoint_value = line_sum - dP_term;
  return out;
}

}  // namespace chaosadj
