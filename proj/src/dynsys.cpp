#include "chaosadj/dynsys.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chaosadj/errors.hpp"
#include "chaosadj/parallel.hpp"
#include "chaosadj/rng.hpp"

namespace chaosadj {

Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 operator*(double c, const Vec3& a) { return {c * a[0], c * a[1], c * a[2]}; }

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 matvec(const Mat3& m, const Vec3& v) {
  return {dot(m[0], v), dot(m[1], v), dot(m[2], v)};
}

const char* to_string(OdeKind kind) {
  switch (kind) {
    case OdeKind::lorenz: return "lorenz";
    case OdeKind::rossler: return "rossler";
  }
  throw config_error("unknown ODE kind");
}

OdeKind ode_kind_from_string(const std::string& name) {
  if (name == "lorenz") return OdeKind::lorenz;
  if (name == "rossler") return OdeKind::rossler;
  throw config_error("unknown ODE system: " + name);
}

OdeSystem OdeSystem::lorenz(double s, double r, double b, double z0) {
  OdeSystem sys;
  sys.kind = OdeKind::lorenz;
  sys.s = s;
  sys.r = r;
  sys.b = b;
  sys.z0 = z0;
  return sys;
}

OdeSystem OdeSystem::rossler(double a, double b, double c) {
  OdeSystem sys;
  sys.kind = OdeKind::rossler;
  sys.a = a;
  sys.b = b;
  sys.c = c;
  return sys;
}

double OdeSystem::section_z() const {
  if (kind != OdeKind::lorenz)
    throw config_error("section plane is defined for the lorenz family only");
  return r + z0 - 1.0;
}

std::vector<std::string> OdeSystem::parameter_names() const {
  if (kind == OdeKind::lorenz) return {"s", "r", "b", "z0"};
  return {"a", "b", "c"};
}

double OdeSystem::parameter(const std::string& name) const {
  if (kind == OdeKind::lorenz) {
    if (name == "s") return s;
    if (name == "r") return r;
    if (name == "b") return b;
    if (name == "z0") return z0;
  } else {
    if (name == "a") return a;
    if (name == "b") return b;
    if (name == "c") return c;
  }
  throw config_error("unknown parameter '" + name + "' for system " +
                     std::string(to_string(kind)));
}

OdeSystem OdeSystem::with_parameter(const std::string& name, double value) const {
  OdeSystem out = *this;
  if (kind == OdeKind::lorenz) {
    if (name == "s") { out.s = value; return out; }
    if (name == "r") { out.r = value; return out; }
    if (name == "b") { out.b = value; return out; }
    if (name == "z0") { out.z0 = value; return out; }
  } else {
    if (name == "a") { out.a = value; return out; }
    if (name == "b") { out.b = value; return out; }
    if (name == "c") { out.c = value; return out; }
  }
  throw config_error("unknown parameter '" + name + "' for system " +
                     std::string(to_string(kind)));
}

Vec3 rhs(const OdeSystem& sys, const Vec3& x) {
  if (sys.kind == OdeKind::lorenz) {
    const double zs = x[2] - sys.z0;
    return {sys.s * (x[1] - x[0]),
            -x[0] * zs + sys.r * x[0] - x[1],
            x[0] * x[1] - sys.b * zs};
  }
  return {-x[1] - x[2],
          x[0] + sys.a * x[1],
          sys.b + x[2] * (x[0] - sys.c)};
}

Mat3 jacobian(const OdeSystem& sys, const Vec3& x) {
  if (sys.kind == OdeKind::lorenz) {
    const double zs = x[2] - sys.z0;
    return {{{-sys.s, sys.s, 0.0},
             {-zs + sys.r, -1.0, -x[0]},
             {x[1], x[0], -sys.b}}};
  }
  return {{{0.0, -1.0, -1.0},
           {1.0, sys.a, 0.0},
           {x[2], 0.0, x[0] - sys.c}}};
}

Vec3 param_derivative(const OdeSystem& sys, const std::string& param, const Vec3& x) {
  if (sys.kind == OdeKind::lorenz) {
    if (param == "s") return {x[1] - x[0], 0.0, 0.0};
    if (param == "r") return {0.0, x[0], 0.0};
    if (param == "b") return {0.0, 0.0, -(x[2] - sys.z0)};
    if (param == "z0") return {0.0, x[0], sys.b};
  } else {
    if (param == "a") return {0.0, x[1], 0.0};
    if (param == "b") return {0.0, 0.0, 1.0};
    if (param == "c") return {0.0, 0.0, -x[2]};
  }
  throw config_error("unknown parameter '" + param + "' for system " +
                     std::string(to_string(sys.kind)));
}

namespace {

bool finite(const Vec3& x) {
  return std::isfinite(x[0]) && std::isfinite(x[1]) && std::isfinite(x[2]);
}

}  // namespace

Vec3 rk4_step(const OdeSystem& sys, const Vec3& x, double dt) {
  if (!finite(x)) throw numerical_error("non-finite state entering integrator step");
  const Vec3 k1 = rhs(sys, x);
  const Vec3 k2 = rhs(sys, x + (0.5 * dt) * k1);
  const Vec3 k3 = rhs(sys, x + (0.5 * dt) * k2);
  const Vec3 k4 = rhs(sys, x + dt * k3);
  const Vec3 out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!finite(out)) throw numerical_error("integrator step produced a non-finite state");
  return out;
}

void rk4_step_tangent(const OdeSystem& sys, Vec3& x, Vec3& delta, double dt) {
  if (!finite(x) || !finite(delta))
    throw numerical_error("non-finite state entering integrator step");
  const Vec3 k1 = rhs(sys, x);
  const Vec3 d1 = matvec(jacobian(sys, x), delta);

  const Vec3 x2 = x + (0.5 * dt) * k1;
  const Vec3 k2 = rhs(sys, x2);
  const Vec3 d2 = matvec(jacobian(sys, x2), delta + (0.5 * dt) * d1);

  const Vec3 x3 = x + (0.5 * dt) * k2;
  const Vec3 k3 = rhs(sys, x3);
  const Vec3 d3 = matvec(jacobian(sys, x3), delta + (0.5 * dt) * d2);

  const Vec3 x4 = x + dt * k3;
  const Vec3 k4 = rhs(sys, x4);
  const Vec3 d4 = matvec(jacobian(sys, x4), delta + dt * d3);

  x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  delta = delta + (dt / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
  if (!finite(x) || !finite(delta))
    throw numerical_error("integrator step produced a non-finite state");
}

CrossingResult integrate_to_crossing(const OdeSystem& sys, const Vec3& x0, double plane_z,
                                     double dt, double t_max, double guard) {
  if (dt <= 0.0) throw config_error("integration step must be positive");
  CrossingResult out;
  out.trajectory.dt = dt;
  out.trajectory.states.push_back(x0);

  // Crossings only count once the orbit has left a band around the plane, so
  // a start on (or numerically near) the plane is not re-detected at once.
  bool armed = std::abs(x0[2] - plane_z) > guard;
  Vec3 prev = x0;
  const long max_steps = static_cast<long>(std::ceil(t_max / dt));
  for (long step = 0; step < max_steps; ++step) {
    const Vec3 next = rk4_step(sys, prev, dt);
    out.trajectory.states.push_back(next);
    if (armed && prev[2] < plane_z && next[2] >= plane_z) {
      const double theta = (plane_z - prev[2]) / (next[2] - prev[2]);
      out.end = prev + theta * (next - prev);
      out.end[2] = plane_z;  // interpolation is exact in z by construction
      out.t_return = dt * (double(step) + theta);
      return out;
    }
    if (!armed && std::abs(next[2] - plane_z) > guard) armed = true;
    prev = next;
  }
  throw numerical_error("no upward plane crossing within the time limit");
}

namespace {

MeanEstimate reduce_runs(const std::vector<double>& run_means) {
  const int m = static_cast<int>(run_means.size());
  const double mean = std::accumulate(run_means.begin(), run_means.end(), 0.0) / double(m);
  double var = 0.0;
  for (double v : run_means) var += (v - mean) * (v - mean);
  MeanEstimate out;
  out.mean = mean;
  out.sem = (m > 1) ? std::sqrt(var / double(m - 1) / double(m)) : 0.0;
  return out;
}

}  // namespace

double dithered_step(const Map1D& map, double x, Rng& gen) {
  constexpr double amp = 0x1p-48;
  const double y = map.eval(x) + uniform(gen, -amp, amp);
  return std::clamp(y, 0.0, 1.0);
}

MeanEstimate ensemble_mean(const Map1D& map, const std::function<double(double)>& J,
                           int m_runs, long n_steps, long spinup, std::uint64_t seed) {
  if (m_runs < 1 || n_steps < 1 || spinup < 0)
    throw config_error("ensemble sizes must be positive (spinup nonnegative)");
  std::vector<double> run_means(static_cast<std::size_t>(m_runs));
  parallel_for(static_cast<std::size_t>(m_runs), [&](std::size_t run) {
    Rng gen(derive_seed(seed, run));
    double x = uniform(gen, 0.25, 0.75);
    for (long i = 0; i < spinup; ++i) x = dithered_step(map, x, gen);
    double acc = 0.0;
    for (long i = 0; i < n_steps; ++i) {
      acc += J(x);
      x = dithered_step(map, x, gen);
    }
    run_means[run] = acc / double(n_steps);
  });
  return reduce_runs(run_means);
}

MeanEstimate ensemble_mean(const OdeSystem& sys, const std::function<double(const Vec3&)>& J,
                           int m_runs, double t_avg, double t_spinup, std::uint64_t seed,
                           double dt) {
  if (m_runs < 1 || t_avg <= 0.0 || t_spinup < 0.0 || dt <= 0.0)
    throw config_error("ensemble times must be positive (spinup nonnegative)");

  // A fixed anchor near the attractor: one long deterministic transient from
  // a generic point.  Runs start from random perturbations of this anchor and
  // then discard their own transient before averaging.
  Vec3 anchor = {1.0, 1.0, sys.z0 + 1.0};
  for (int i = 0; i < 5000; ++i) anchor = rk4_step(sys, anchor, dt);

  const long n_spin = static_cast<long>(std::llround(t_spinup / dt));
  const long n_avg = static_cast<long>(std::llround(t_avg / dt));
  std::vector<double> run_means(static_cast<std::size_t>(m_runs));
  parallel_for(static_cast<std::size_t>(m_runs), [&](std::size_t run) {
    Rng gen(derive_seed(seed, run));
    Vec3 x = {anchor[0] + uniform(gen, -0.5, 0.5),
              anchor[1] + uniform(gen, -0.5, 0.5),
              anchor[2] + uniform(gen, -0.5, 0.5)};
    for (long i = 0; i < n_spin; ++i) x = rk4_step(sys, x, dt);
    double acc = 0.0;
    for (long i = 0; i < n_avg; ++i) {
      acc += J(x);
      x = rk4_step(sys, x, dt);
    }
    run_means[run] = acc / double(n_avg);
  });
  return reduce_runs(run_means);
}

}  // namespace chaosadj
