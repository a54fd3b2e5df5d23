#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chaosadj/dynsys.hpp"

namespace chaosadj {

// Mirror about the z-axis: (x, y, z) -> (-x, -y, z).  An involution.
Vec3 mirror_xy(const Vec3& p);

// Maps a point into the first-quadrant half (x >= 0) by mirroring when
// needed.  Idempotent: folding an already-folded point changes nothing.
Vec3 fold_to_first_quadrant(const Vec3& p);

// Least-squares polynomial arc y(x) through the folded section crossings of
// the attractor at the plane z = plane_z.  The fit is performed in a shifted
// and scaled abscissa u = (x - center)/halfwidth for conditioning; `coeffs`
// carries the same polynomial expanded in plain powers of x.
struct SectionFit {
  double plane_z = 0.0;
  int degree = 7;
  std::vector<double> coeffs;         // y(x) = sum_k coeffs[k] x^k
  std::vector<double> scaled_coeffs;  // y = sum_k scaled_coeffs[k] u^k
  double center = 0.0;
  double halfwidth = 1.0;
  double x_min = 0.0;
  double x_max = 0.0;
  double rms_residual = 0.0;
  double y_range = 0.0;
  double condition = 0.0;

  double x_span() const { return x_max - x_min; }
  double eval(double x) const;
  double deriv(double x) const;
  // The 3D point on the section curve above abscissa x.
  Vec3 point(double x) const;
};

// All upward crossings of the section plane along one long orbit, after a
// 50-time-unit transient.  Throws numerical_error if fewer than 500 crossings
// accumulate (the orbit is not filling the attractor).
std::vector<Vec3> sample_poincare(const OdeSystem& sys, double t_total, double dt = 0.01);

// Mirrors every negative-x point into the first quadrant.
std::vector<Vec3> fold_points(const std::vector<Vec3>& points);

// Degree-`degree` least-squares fit of y against x through folded crossing
// points.  Requires at least 100 points; throws numerical_error when the
// normal geometry is ill-conditioned (condition estimate in the message).
SectionFit fit_section(const std::vector<Vec3>& folded_points, int degree = 7);

enum class SeedDistribution { uniform_x, clustered };

const char* to_string(SeedDistribution dist);
SeedDistribution seed_distribution_from_string(const std::string& name);

// Streamline start positions along the section arc.
struct SeedSet {
  SeedDistribution distribution = SeedDistribution::uniform_x;
  std::vector<double> x;      // ascending abscissae, endpoints included
  std::vector<Vec3> start;    // points on the fitted arc
  std::vector<double> ds0;    // spanwise width owned by each seed
  double bifurcation_x = 0.0; // meaningful for clustered seeding
};

// Start abscissa at which the streamline's return flips between the first
// and third quadrant, located by bisection.  Throws numerical_error when the
// flip is not bracketed by the domain ends.
double locate_bifurcation_x(const OdeSystem& sys, const SectionFit& fit);

// M >= 16 seeds over the fitted arc: equally spaced in x, or spaced 4x more
// densely inside a window of width 10% of the domain around the return-flip
// abscissa.  ds0 is half the distance to each existing neighbor, summed, so
// the ds0 partition the arc's x-extent exactly.
SeedSet seed_streamlines(const OdeSystem& sys, const SectionFit& fit, int M,
                         SeedDistribution distribution);

struct MeshNode {
  Vec3 pos{};
  double speed = 0.0;  // |f|
  Vec3 l_hat{};        // unit streamwise direction f/|f|
  Vec3 s_hat{};        // unit spanwise direction, orthogonal to l_hat
  double t = 0.0;      // time since the streamline start
};

enum class ReturnQuadrant { first, third };

struct Streamline {
  Vec3 start{};
  std::vector<MeshNode> nodes;  // N nodes equally spaced in time
  double T = 0.0;               // return time to the section
  Vec3 end{};                   // crossing point, before folding
  ReturnQuadrant return_quadrant = ReturnQuadrant::first;
  double return_x = 0.0;        // folded crossing projected onto the fit arc
  double ds0 = 0.0;             // spanwise width at the seed (assigned by the mesh)
};

// Traces one streamline from `start` to its next upward section crossing,
// resampled to N nodes equally spaced in time.  The spanwise frame comes from
// transporting the separation to `neighbor_start` with the tangent-linear
// dynamics and projecting out the streamwise component.  Third-quadrant
// returns are folded; return_x is the nearest point on the fit arc.
Streamline trace_streamline(const OdeSystem& sys, const Vec3& start, int N,
                            const Vec3& neighbor_start, const SectionFit& fit,
                            double dt = 0.01);

struct AttractorMesh {
  OdeSystem sys;
  SectionFit fit;
  SeedSet seeds;
  int N = 0;
  std::vector<Streamline> lines;

  int M() const { return static_cast<int>(lines.size()); }
};

// Seeds and traces the full M x N surface mesh.  Streamline i uses seed i+1
// as its spanwise neighbor (the last uses its predecessor); tracing is
// parallel over seeds with results in deterministic slots.
AttractorMesh build_mesh(const OdeSystem& sys, const SectionFit& fit, int M, int N,
                         SeedDistribution distribution, double dt = 0.01);

}  // namespace chaosadj
