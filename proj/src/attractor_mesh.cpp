#include "chaosadj/attractor_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include <Eigen/Dense>

#include "chaosadj/errors.hpp"
#include "chaosadj/parallel.hpp"

namespace chaosadj {

Vec3 mirror_xy(const Vec3& p) { return Vec3{-p[0], -p[1], p[2]}; }

Vec3 fold_to_first_quadrant(const Vec3& p) { return p[0] < 0.0 ? mirror_xy(p) : p; }

double SectionFit::eval(double x) const {
  const double u = (x - center) / halfwidth;
  double acc = 0.0;
  for (std::size_t k = scaled_coeffs.size(); k-- > 0;) acc = acc * u + scaled_coeffs[k];
  return acc;
}

double SectionFit::deriv(double x) const {
  const double u = (x - center) / halfwidth;
  double acc = 0.0;
  for (std::size_t k = scaled_coeffs.size(); k-- > 1;)
    acc = acc * u + scaled_coeffs[k] * static_cast<double>(k);
  return acc / halfwidth;
}

Vec3 SectionFit::point(double x) const { return Vec3{x, eval(x), plane_z}; }

std::vector<Vec3> sample_poincare(const OdeSystem& sys, double t_total, double dt) {
  if (dt <= 0.0) throw config_error("integration step must be positive");
  if (t_total <= 0.0) throw config_error("sampling time must be positive");
  const double plane = sys.section_z();

  // Deterministic transient: 50 time units from a fixed off-attractor point.
  Vec3 x{1.0, 1.0, sys.z0 + 1.0};
  const long n_spin = std::lround(50.0 / dt);
  for (long i = 0; i < n_spin; ++i) x = rk4_step(sys, x, dt);

  std::vector<Vec3> crossings;
  double elapsed = 0.0;
  while (elapsed < t_total) {
    const CrossingResult cr = integrate_to_crossing(sys, x, plane, dt);
    crossings.push_back(cr.end);
    // Continue the raw orbit from the step past the plane so the sampled
    // trajectory stays a single uninterrupted solution.
    x = cr.trajectory.states.back();
    elapsed += dt * static_cast<double>(cr.trajectory.states.size());
  }
  if (crossings.size() < 500)
    throw numerical_error("section sampling produced too few crossings (" +
                          std::to_string(crossings.size()) + " < 500)");
  return crossings;
}

std::vector<Vec3> fold_points(const std::vector<Vec3>& points) {
  std::vector<Vec3> folded(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) folded[i] = fold_to_first_quadrant(points[i]);
  return folded;
}

namespace {

// Expands sum_k s_k ((x - c)/h)^k into plain powers of x by Horner-style
// polynomial composition.
std::vector<double> expand_scaled_poly(const std::vector<double>& s, double c, double h) {
  std::vector<double> a;  // coefficients in powers of x, low to high
  for (std::size_t k = s.size(); k-- > 0;) {
    std::vector<double> b(a.size() + 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      b[i + 1] += a[i] / h;
      b[i] -= a[i] * (c / h);
    }
    b[0] += s[k];
    a = std::move(b);
  }
  a.resize(s.size(), 0.0);
  return a;
}

}  // namespace

SectionFit fit_section(const std::vector<Vec3>& folded_points, int degree) {
  if (degree < 1 || degree > 12) throw config_error("section fit degree must be in [1, 12]");
  const std::size_t n = folded_points.size();
  if (n < 100) throw config_error("section fit needs at least 100 points");

  SectionFit fit;
  fit.degree = degree;
  fit.plane_z = folded_points.front()[2];

  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_min = std::numeric_limits<double>::infinity();
  double y_max = -y_min;
  for (const Vec3& p : folded_points) {
    x_min = std::min(x_min, p[0]);
    x_max = std::max(x_max, p[0]);
    y_min = std::min(y_min, p[1]);
    y_max = std::max(y_max, p[1]);
  }
  if (!(x_max > x_min)) throw numerical_error("section fit points span no x-extent");
  fit.x_min = x_min;
  fit.x_max = x_max;
  fit.y_range = y_max - y_min;
  fit.center = 0.5 * (x_min + x_max);
  fit.halfwidth = 0.5 * (x_max - x_min);

  const int m = degree + 1;
  Eigen::MatrixXd V(static_cast<Eigen::Index>(n), m);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (folded_points[i][0] - fit.center) / fit.halfwidth;
    double p = 1.0;
    for (int k = 0; k < m; ++k) {
      V(static_cast<Eigen::Index>(i), k) = p;
      p *= u;
    }
    y(static_cast<Eigen::Index>(i)) = folded_points[i][1];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
  const Eigen::MatrixXd& R = qr.matrixR();
  const double r_head = std::abs(R(0, 0));
  const double r_tail = std::abs(R(m - 1, m - 1));
  fit.condition = r_tail > 0.0 ? r_head / r_tail : std::numeric_limits<double>::infinity();
  if (!(fit.condition < 1e10))
    throw numerical_error("section fit is ill-conditioned (condition estimate " +
                          std::to_string(fit.condition) + ")");

  const Eigen::VectorXd c = qr.solve(y);
  fit.scaled_coeffs.assign(c.data(), c.data() + m);
  fit.coeffs = expand_scaled_poly(fit.scaled_coeffs, fit.center, fit.halfwidth);

  const Eigen::VectorXd resid = V * c - y;
  fit.rms_residual = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  return fit;
}

const char* to_string(SeedDistribution dist) {
  return dist == SeedDistribution::uniform_x ? "uniform_x" : "clustered";
}

SeedDistribution seed_distribution_from_string(const std::string& name) {
  if (name == "uniform_x") return SeedDistribution::uniform_x;
  if (name == "clustered") return SeedDistribution::clustered;
  throw config_error("unknown seed distribution: " + name);
}

namespace {

ReturnQuadrant return_quadrant_of(const OdeSystem& sys, const SectionFit& fit, double x0) {
  const CrossingResult cr = integrate_to_crossing(sys, fit.point(x0), fit.plane_z);
  return cr.end[0] >= 0.0 ? ReturnQuadrant::first : ReturnQuadrant::third;
}

}  // namespace

double locate_bifurcation_x(const OdeSystem& sys, const SectionFit& fit) {
  double lo = fit.x_min;
  double hi = fit.x_max;
  const ReturnQuadrant q_lo = return_quadrant_of(sys, fit, lo);
  const ReturnQuadrant q_hi = return_quadrant_of(sys, fit, hi);
  if (q_lo == q_hi)
    throw numerical_error("return-quadrant flip is not bracketed by the section domain");
  for (int iter = 0; iter < 100 && (hi - lo) > 1e-12 * fit.x_span(); ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (return_quadrant_of(sys, fit, mid) == q_lo)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

SeedSet seed_streamlines(const OdeSystem& sys, const SectionFit& fit, int M,
                         SeedDistribution distribution) {
  if (M < 16) throw config_error("streamline count must be at least 16");

  SeedSet seeds;
  seeds.distribution = distribution;
  seeds.x.resize(M);

  if (distribution == SeedDistribution::uniform_x) {
    for (int i = 0; i < M; ++i)
      seeds.x[i] = fit.x_min + fit.x_span() * static_cast<double>(i) / (M - 1);
  } else {
    const double x_star = locate_bifurcation_x(sys, fit);
    seeds.bifurcation_x = x_star;
    const double half_window = 0.05 * fit.x_span();
    const double w_lo = std::max(fit.x_min, x_star - half_window);
    const double w_hi = std::min(fit.x_max, x_star + half_window);

    // Piecewise-constant seeding density: 4x inside the window.  Seeds sit at
    // equal increments of the cumulative density.
    const double breaks[4] = {fit.x_min, w_lo, w_hi, fit.x_max};
    const double weights[3] = {1.0, 4.0, 1.0};
    double cum[4] = {0.0, 0.0, 0.0, 0.0};
    for (int j = 0; j < 3; ++j) cum[j + 1] = cum[j] + weights[j] * (breaks[j + 1] - breaks[j]);
    const double w_total = cum[3];
    for (int i = 0; i < M; ++i) {
      const double target = w_total * static_cast<double>(i) / (M - 1);
      int j = 0;
      while (j < 2 && target > cum[j + 1]) ++j;
      seeds.x[i] = breaks[j] + (target - cum[j]) / weights[j];
    }
  }
  seeds.x.front() = fit.x_min;
  seeds.x.back() = fit.x_max;

  seeds.start.resize(M);
  for (int i = 0; i < M; ++i) seeds.start[i] = fit.point(seeds.x[i]);

  seeds.ds0.resize(M);
  for (int i = 0; i < M; ++i) {
    double w = 0.0;
    if (i > 0) w += 0.5 * (seeds.x[i] - seeds.x[i - 1]);
    if (i + 1 < M) w += 0.5 * (seeds.x[i + 1] - seeds.x[i]);
    seeds.ds0[i] = w;
  }
  return seeds;
}

namespace {

// Abscissa of the nearest point on the fitted arc, searched slightly beyond
// the arc's own x-extent so genuine extrapolation stays detectable downstream.
double project_onto_fit(const SectionFit& fit, const Vec3& p) {
  const double margin = 0.05 * fit.x_span();
  const double lo = fit.x_min - margin;
  const double hi = fit.x_max + margin;
  const double ex = p[0];
  const double ey = p[1];

  const auto dist2 = [&](double x) {
    const double dy = fit.eval(x) - ey;
    const double dx = x - ex;
    return dx * dx + dy * dy;
  };
  // d(dist2)/dx up to a factor of 2.
  const auto slope = [&](double x) { return (x - ex) + fit.deriv(x) * (fit.eval(x) - ey); };

  constexpr int n_scan = 512;
  double best_x = lo;
  double best_d = dist2(lo);
  for (int i = 1; i <= n_scan; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / n_scan;
    const double d = dist2(x);
    if (d < best_d) {
      best_d = d;
      best_x = x;
    }
  }

  const double cell = (hi - lo) / n_scan;
  double a = std::max(lo, best_x - cell);
  double b = std::min(hi, best_x + cell);
  if (slope(a) < 0.0 && slope(b) > 0.0) {
    for (int iter = 0; iter < 80; ++iter) {
      const double mid = 0.5 * (a + b);
      if (slope(mid) < 0.0)
        a = mid;
      else
        b = mid;
    }
    return 0.5 * (a + b);
  }
  // No interior stationary point in the bracket (minimum pinned at a scan
  // boundary); fall back to a golden-section squeeze.
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = dist2(x1);
  double f2 = dist2(x2);
  for (int iter = 0; iter < 100; ++iter) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = dist2(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = dist2(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

Streamline trace_streamline(const OdeSystem& sys, const Vec3& start, int N,
                            const Vec3& neighbor_start, const SectionFit& fit, double dt) {
  if (N < 2) throw config_error("streamline node count must be at least 2");

  Streamline line;
  line.start = start;

  const CrossingResult cr = integrate_to_crossing(sys, start, fit.plane_z, dt);

  // The node spacing T/(N-1) is a sampling choice, not an integration step:
  // node-to-node advances use RK4 substeps no coarser than dt, so a small N
  // stays accurate and the resampled orbit never drifts from the detected
  // one (streamlines grazing the saddle amplify any such drift).
  const auto advance_node = [&](Vec3& x, Vec3* delta, double span) {
    const int m = std::max(1, static_cast<int>(std::ceil(span / dt - 1e-12)));
    const double hs = span / m;
    for (int k = 0; k < m; ++k) {
      if (delta)
        rk4_step_tangent(sys, x, *delta, hs);
      else
        x = rk4_step(sys, x, hs);
    }
  };

  // The crossing time from the detection pass is only a first guess: polish
  // T with Newton so the resampled endpoint lands on the plane itself,
  // keeping the node orbit, the return time, and the return point mutually
  // consistent.
  const auto endpoint_at = [&](double T) {
    Vec3 x = start;
    const double h = T / (N - 1);
    for (int j = 0; j + 1 < N; ++j) advance_node(x, nullptr, h);
    return x;
  };
  double T = cr.t_return;
  Vec3 end = endpoint_at(T);
  double best_T = T;
  Vec3 best_end = end;
  double best_resid = std::abs(end[2] - fit.plane_z);
  for (int iter = 0; iter < 10 && best_resid > 1e-11; ++iter) {
    const double fz = rhs(sys, end)[2];
    if (std::abs(fz) < 1e-12) break;  // plane tangency: keep the best value
    const double T_next = T - (end[2] - fit.plane_z) / fz;
    if (!(T_next > 0.5 * cr.t_return) || !(T_next < 1.5 * cr.t_return)) break;
    T = T_next;
    end = endpoint_at(T);
    const double resid = std::abs(end[2] - fit.plane_z);
    if (resid < best_resid) {
      best_resid = resid;
      best_T = T;
      best_end = end;
    }
  }
  if (!(best_resid < 1e-6))
    throw numerical_error(
        "streamline return-time refinement did not converge (plane residual " +
        std::to_string(best_resid) + "); the resampling step T/(N-1) is too coarse");
  line.T = best_T;
  line.end = best_end;
  line.return_quadrant = line.end[0] >= 0.0 ? ReturnQuadrant::first : ReturnQuadrant::third;
  line.return_x = project_onto_fit(fit, fold_to_first_quadrant(line.end));

  // Final pass: record the N nodes, carrying the spanwise separation with
  // the tangent-linear dynamics.
  const double h = line.T / (N - 1);
  Vec3 x = start;
  Vec3 delta = neighbor_start - start;
  line.nodes.resize(N);
  for (int j = 0; j < N; ++j) {
    MeshNode& node = line.nodes[j];
    node.pos = x;
    node.t = line.T * static_cast<double>(j) / (N - 1);
    const Vec3 f = rhs(sys, x);
    node.speed = norm(f);
    if (node.speed < 1e-12)
      throw numerical_error("frame degeneracy: vanishing velocity on a streamline");
    node.l_hat = (1.0 / node.speed) * f;
    const Vec3 perp = delta - dot(delta, node.l_hat) * node.l_hat;
    const double perp_norm = norm(perp);
    if (perp_norm < 1e-12)
      throw numerical_error("frame degeneracy: spanwise separation aligned with the flow");
    node.s_hat = (1.0 / perp_norm) * perp;
    if (j + 1 < N) advance_node(x, &delta, h);
  }
  return line;
}

AttractorMesh build_mesh(const OdeSystem& sys, const SectionFit& fit, int M, int N,
                         SeedDistribution distribution, double dt) {
  AttractorMesh mesh;
  mesh.sys = sys;
  mesh.fit = fit;
  mesh.seeds = seed_streamlines(sys, fit, M, distribution);
  mesh.N = N;
  mesh.lines.resize(M);
  parallel_for(static_cast<std::size_t>(M), [&](std::size_t u) {
    const int i = static_cast<int>(u);
    const int nb = (i + 1 < M) ? i + 1 : i - 1;
    mesh.lines[i] =
        trace_streamline(sys, mesh.seeds.start[i], N, mesh.seeds.start[nb], fit, dt);
    mesh.lines[i].ds0 = mesh.seeds.ds0[i];
  });
  return mesh;
}

}  // namespace chaosadj
