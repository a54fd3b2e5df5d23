#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "chaosadj/maps1d.hpp"
#include "chaosadj/rng.hpp"

namespace chaosadj {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

Vec3 operator+(const Vec3& a, const Vec3& b);
Vec3 operator-(const Vec3& a, const Vec3& b);
Vec3 operator*(double c, const Vec3& a);
double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);
Vec3 matvec(const Mat3& m, const Vec3& v);

enum class OdeKind { lorenz, rossler };

const char* to_string(OdeKind kind);
OdeKind ode_kind_from_string(const std::string& name);

// Two three-dimensional chaotic flows.
//
//   lorenz (with the attractor shifted along z by z0):
//     x' = s (y - x)
//     y' = -x (z - z0) + r x - y
//     z' = x y - b (z - z0)
//   rossler:
//     x' = -y - z
//     y' = x + a y
//     z' = b + z (x - c)
//
// The canonical Lorenz parameters are s=10, r=28, b=8/3, z0=0; the canonical
// Rossler parameters are a=b=0.1, c=14.  `b` is shared between the families
// (each uses only its own named parameters).
struct OdeSystem {
  OdeKind kind = OdeKind::lorenz;
  double s = 10.0;
  double r = 28.0;
  double b = 8.0 / 3.0;
  double z0 = 0.0;
  double a = 0.1;
  double c = 14.0;

  static OdeSystem lorenz(double s = 10.0, double r = 28.0, double b = 8.0 / 3.0,
                          double z0 = 0.0);
  static OdeSystem rossler(double a = 0.1, double b = 0.1, double c = 14.0);

  // Height of the Poincare section plane used for the surface mesh: the
  // z-coordinate of the two nonzero Lorenz fixed points, r + z0 - 1.
  double section_z() const;

  // Names of the differentiable parameters of this family.
  std::vector<std::string> parameter_names() const;

  // Value of a named parameter; throws config_error for an unknown name.
  double parameter(const std::string& name) const;
  // Returns a copy with the named parameter replaced.
  OdeSystem with_parameter(const std::string& name, double value) const;
};

// f(x) for the configured family.
Vec3 rhs(const OdeSystem& sys, const Vec3& x);

// Analytic Jacobian df/dx.
Mat3 jacobian(const OdeSystem& sys, const Vec3& x);

// Analytic df/dparam for a named parameter; throws config_error for an
// unknown name.
Vec3 param_derivative(const OdeSystem& sys, const std::string& param, const Vec3& x);

// One classical 4th-order Runge-Kutta step of size dt (dt = 0 returns x).
// Throws numerical_error if the state is or becomes non-finite.
Vec3 rk4_step(const OdeSystem& sys, const Vec3& x, double dt = 0.01);

// One RK4 step of the state coupled to a tangent-linear perturbation
// delta' = Jac(x) delta along the trajectory.
void rk4_step_tangent(const OdeSystem& sys, Vec3& x, Vec3& delta, double dt = 0.01);

// States sampled every dt time units along one orbit.
struct Trajectory {
  double dt = 0.0;
  std::vector<Vec3> states;

  double time(std::size_t i) const { return dt * double(i); }
};

struct CrossingResult {
  Trajectory trajectory;  // samples from x0 through the first step past the crossing
  Vec3 end;               // crossing point, linearly interpolated between steps
  double t_return = 0.0;  // interpolated crossing time
};

// Integrates from x0 until the orbit crosses z = plane_z with dz/dt > 0.
// Crossings are ignored until the orbit has left a guard band of half-width
// `guard` around the plane, so a start on the plane is not detected
// immediately; the crossing is then located by linear interpolation between
// the bracketing steps.  Throws numerical_error if no crossing occurs within
// t_max time units.
CrossingResult integrate_to_crossing(const OdeSystem& sys, const Vec3& x0, double plane_z,
                                     double dt = 0.01, double t_max = 100.0,
                                     double guard = 0.1);

// Sample mean and its standard error over an ensemble of independent runs.
struct MeanEstimate {
  double mean = 0.0;
  double sem = 0.0;  // standard error of the mean across runs
};

// One map iterate with a seeded dither of amplitude 2^-48.  Every IEEE
// double is a dyadic rational, so the exactly-piecewise-linear family members
// (unit-slope tent) send any floating-point orbit onto the x = 0 fixed point
// within a few dozen iterates; the dither keeps simulated orbits on the
// physical invariant measure while shifting averages only at the 1e-15
// scale, far below the statistical resolution of any ensemble used here.
double dithered_step(const Map1D& map, double x, Rng& gen);

// Ensemble average of J over m_runs map trajectories of n_steps iterates
// each, after discarding `spinup` iterates.  Initial conditions are uniform
// in [0.25, 0.75); iteration uses dithered_step; per-run seeds derive
// deterministically from `seed`, so the result is bit-identical for any
// thread count.
MeanEstimate ensemble_mean(const Map1D& map, const std::function<double(double)>& J,
                           int m_runs, long n_steps, long spinup, std::uint64_t seed);

// Ensemble average of J over m_runs orbits averaged for t_avg time units
// after a t_spinup transient.  Each run starts from a random perturbation
// (uniform in [-0.5, 0.5]^3) of a fixed on-attractor anchor point, then spins
// up before averaging; per-run seeds derive deterministically from `seed`.
MeanEstimate ensemble_mean(const OdeSystem& sys, const std::function<double(const Vec3&)>& J,
                           int m_runs, double t_avg, double t_spinup, std::uint64_t seed,
                           double dt = 0.01);

}  // namespace chaosadj
