#include "chaosadj/density_surface.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "chaosadj/errors.hpp"
#include "chaosadj/parallel.hpp"

namespace chaosadj {

double node_contraction(const OdeSystem& sys, const MeshNode& node) {
  const Mat3 J = jacobian(sys, node.pos);
  return dot(node.l_hat, matvec(J, node.l_hat)) + dot(node.s_hat, matvec(J, node.s_hat));
}

namespace {

double log_ratio_impl(const Streamline& line,
                      const std::function<double(const MeshNode&)>& contraction) {
  const std::size_t n = line.nodes.size();
  double acc = 0.0;
  double prev = contraction(line.nodes[0]);
  for (std::size_t j = 1; j < n; ++j) {
    const double cur = contraction(line.nodes[j]);
    acc += (line.nodes[j].t - line.nodes[j - 1].t) * 0.5 * (prev + cur);
    prev = cur;
  }
  return -acc;
}

}  // namespace

double density_log_ratio(const Streamline& line, const OdeSystem& sys) {
  return log_ratio_impl(line,
                        [&](const MeshNode& nd) { return node_contraction(sys, nd); });
}

double density_log_ratio(const Streamline& line,
                         const std::function<Mat3(const Vec3&)>& jacobian_at) {
  return log_ratio_impl(line, [&](const MeshNode& nd) {
    const Mat3 J = jacobian_at(nd.pos);
    return dot(nd.l_hat, matvec(J, nd.l_hat)) + dot(nd.s_hat, matvec(J, nd.s_hat));
  });
}

std::vector<double> density_ratios(const AttractorMesh& mesh) {
  std::vector<double> ratios(mesh.M());
  parallel_for(ratios.size(), [&](std::size_t i) {
    ratios[i] = std::exp(density_log_ratio(mesh.lines[i], mesh.sys));
  });
  return ratios;
}

std::vector<double> seed_flux_weights(const AttractorMesh& mesh) {
  std::vector<double> D(mesh.M());
  for (int i = 0; i < mesh.M(); ++i) {
    const MeshNode& n0 = mesh.lines[i].nodes.front();
    const Vec3 f0 = n0.speed * n0.l_hat;
    D[i] = norm(cross(f0, n0.s_hat)) * mesh.lines[i].ds0;
  }
  return D;
}

std::vector<double> normalization_weights(const AttractorMesh& mesh) {
  std::vector<double> v = seed_flux_weights(mesh);
  for (int i = 0; i < mesh.M(); ++i) v[i] *= mesh.lines[i].T;
  return v;
}

SparseTransition build_section_operator(const AttractorMesh& mesh,
                                        const std::vector<double>& ratios) {
  const int M = mesh.M();
  if (static_cast<int>(ratios.size()) != M)
    throw config_error("ratio count does not match the streamline count");
  const std::vector<double>& xs = mesh.seeds.x;

  // A return may sit slightly outside the sampled arc (the sampled extremes
  // undershoot the attractor's true extent, and the gather below simply skips
  // families that do not bracket a query).  Reject only genuine escapes: more
  // than one edge cell or 0.5% of the arc span, whichever is larger, so the
  // guard does not tighten with mesh resolution.
  const double margin_lo = std::max(xs[1] - xs[0], 0.005 * mesh.fit.x_span());
  const double margin_hi = std::max(xs[M - 1] - xs[M - 2], 0.005 * mesh.fit.x_span());
  for (const Streamline& ln : mesh.lines) {
    if (ln.return_x < mesh.fit.x_min - margin_lo || ln.return_x > mesh.fit.x_max + margin_hi)
      throw numerical_error("streamline return at x = " + std::to_string(ln.return_x) +
                            " escapes the section arc");
  }

  // Arrival samples per return family, sorted by return abscissa.  Row j
  // gathers, from each family that brackets seed j, the linear interpolation
  // of arriving density between the two bracketing streamlines.
  std::vector<std::pair<double, int>> family[2];
  for (int i = 0; i < M; ++i) {
    const int f = mesh.lines[i].return_quadrant == ReturnQuadrant::first ? 0 : 1;
    family[f].emplace_back(mesh.lines[i].return_x, i);
  }
  std::sort(family[0].begin(), family[0].end());
  std::sort(family[1].begin(), family[1].end());

  SparseTransition P(M);
  for (int j = 0; j < M; ++j) {
    const double xq = xs[j];
    for (const auto& fam : family) {
      if (fam.size() < 2 || xq < fam.front().first || xq > fam.back().first) continue;
      auto it = std::lower_bound(fam.begin(), fam.end(), std::make_pair(xq, -1));
      const std::size_t hi = std::clamp<std::size_t>(it - fam.begin(), 1, fam.size() - 1);
      const auto& [xa, ia] = fam[hi - 1];
      const auto& [xb, ib] = fam[hi];
      const double w = xb > xa ? (xq - xa) / (xb - xa) : 0.5;
      P.add(j, ia, (1.0 - w) * ratios[ia]);
      P.add(j, ib, w * ratios[ib]);
    }
  }
  return P;
}

SectionDensity poincare_density(const AttractorMesh& mesh, const SparseTransition& P,
                                int filter_width) {
  const int M = mesh.M();
  if (P.size() != M) throw config_error("operator size does not match the mesh");
  if (filter_width > 1 && filter_width % 2 == 0)
    throw config_error("smoothing width must be odd");

  const PowerIterationResult power =
      power_iteration(P, /*transpose=*/false, std::vector<double>(M, 1.0), 512, 1e-12);

  SectionDensity sd;
  sd.lambda = power.lambda;
  sd.iterations = power.iterations;
  sd.converged = power.converged;
  sd.rho0 = power.vec;

  if (filter_width > 1) {
    const int k = filter_width / 2;
    std::vector<double> smooth(M);
    for (int i = 0; i < M; ++i) {
      const int lo = std::max(0, i - k);
      const int hi = std::min(M - 1, i + k);
      double acc = 0.0;
      for (int q = lo; q <= hi; ++q) acc += sd.rho0[q];
      smooth[i] = acc / (hi - lo + 1);
    }
    sd.rho0 = std::move(smooth);
  }

  sd.D = seed_flux_weights(mesh);
  sd.v = normalization_weights(mesh);
  double scale = 0.0;
  for (int i = 0; i < M; ++i) scale += sd.rho0[i] * sd.v[i];
  if (!(scale > 0.0))
    throw numerical_error("section density has no positive mass against the flux weights");
  for (double& r : sd.rho0) r /= scale;

  // Residual of the (rescale-invariant) eigenproblem at the final iterate.
  const std::vector<double> Pr = P.apply(sd.rho0);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < M; ++i) {
    num = std::max(num, std::abs(Pr[i] - sd.lambda * sd.rho0[i]));
    den = std::max(den, std::abs(sd.rho0[i]));
  }
  sd.residual = num / den;
  return sd;
}

SurfaceField surface_density(const AttractorMesh& mesh, const SectionDensity& sd) {
  const int M = mesh.M();
  const int N = mesh.N;
  if (static_cast<int>(sd.rho0.size()) != M)
    throw config_error("section density size does not match the mesh");
  SurfaceField field(M, N);
  parallel_for(static_cast<std::size_t>(M), [&](std::size_t i) {
    const Streamline& ln = mesh.lines[i];
    double acc = 0.0;  // integral of the contraction rate up to node j
    double prev = node_contraction(mesh.sys, ln.nodes[0]);
    field.at(static_cast<int>(i), 0) = sd.rho0[i];
    for (int j = 1; j < N; ++j) {
      const double cur = node_contraction(mesh.sys, ln.nodes[j]);
      acc += (ln.nodes[j].t - ln.nodes[j - 1].t) * 0.5 * (prev + cur);
      prev = cur;
      field.at(static_cast<int>(i), j) = sd.rho0[i] * std::exp(-acc);
    }
  });
  return field;
}

double streamline_time_integral(const Streamline& line,
                                const std::function<double(const Vec3&)>& J) {
  double acc = 0.0;
  double prev = J(line.nodes[0].pos);
  for (std::size_t j = 1; j < line.nodes.size(); ++j) {
    const double cur = J(line.nodes[j].pos);
    acc += (line.nodes[j].t - line.nodes[j - 1].t) * 0.5 * (prev + cur);
    prev = cur;
  }
  return acc;
}

double mean_quantity(const AttractorMesh& mesh, const SectionDensity& sd,
                     const std::function<double(const Vec3&)>& J) {
  if (static_cast<int>(sd.rho0.size()) != mesh.M())
    throw config_error("section density size does not match the mesh");
  double mean = 0.0;
  for (int i = 0; i < mesh.M(); ++i)
    mean += streamline_time_integral(mesh.lines[i], J) * sd.D[i] * sd.rho0[i];
  return mean;
}

}  // namespace chaosadj
