#pragma once

#include <functional>
#include <string>
#include <vector>

#include "chaosadj/attractor_mesh.hpp"
#include "chaosadj/density_surface.hpp"
#include "chaosadj/dynsys.hpp"
#include "chaosadj/sparse_transition.hpp"

namespace chaosadj {

// Time integral of the objective along one streamline, trapezoid on the node
// grid (the per-streamline objective entering the section adjoint solve).
double streamline_objective(const Streamline& line,
                            const std::function<double(const Vec3&)>& J);

struct SectionAdjoint {
  std::vector<double> phi0;  // adjoint density at the streamline seeds
  double Jbar = 0.0;         // long-time average recovered as the second unknown
  double residual = 0.0;     // inf-norm residual of the bordered solve
};

// Bordered sparse solve for the section adjoint density:
//
//   [ (D^-1 P^T D - lambda I)   D^-1 v ] [ phi0 ]   [ Jobj ]
//   [        rho0^T D              0   ] [ Jbar ] = [   0  ]
//
// The +v column makes the recovered second unknown equal the long-time
// average itself (left-multiplying the first block row by rho0^T D
// telescopes to Jbar = rho0^T D Jobj); with the -v column of the raw adjoint
// derivation the unknown would be the adjoint eigenvalue eta = -Jbar.
// Throws numerical_error if the factorization fails or the residual exceeds
// 1e-9.
SectionAdjoint solve_section_adjoint(const SparseTransition& P, const std::vector<double>& D,
                                     const std::vector<double>& v,
                                     const std::vector<double>& rho0,
                                     const std::vector<double>& J_objective, double lambda);

// Adjoint over the whole surface: along each streamline
// d(phi)/dt = J(x) - Jbar integrated forward from phi0_i on the uniform node
// grid (trapezoid increments, matching streamline_objective's quadrature).
SurfaceField surface_adjoint(const AttractorMesh& mesh, const SectionAdjoint& adj,
                             const std::function<double(const Vec3&)>& J);

struct NodeAreas {
  SurfaceField dA;                // manifold area attached to each node
  std::vector<double> line_area;  // total area of each streamline
};

// Node areas from conservation of probability mass: along each streamline
// dA/dt = rho0_i |f0 x s0| ds0_i / rho(x(t)), integrated with the density
// piecewise linear on the node grid; node k owns the area between the
// midpoints around it; the first and last nodes own the remainder out to the
// streamline ends.  Streamlines with zero seed density carry zero area.
NodeAreas node_areas(const AttractorMesh& mesh, const SurfaceField& rho_surface,
                     const SectionDensity& sd);

// A 3-vector sampled on every mesh node, row-major per streamline.
struct VectorField {
  int M = 0;
  int N = 0;
  std::vector<Vec3> values;

  VectorField() = default;
  VectorField(int m, int n)
      : M(m), N(n), values(static_cast<std::size_t>(m) * n, Vec3{0.0, 0.0, 0.0}) {}
  Vec3& at(int i, int j) { return values[static_cast<std::size_t>(i) * N + j]; }
  const Vec3& at(int i, int j) const { return values[static_cast<std::size_t>(i) * N + j]; }
};

// df/dxi of the mesh's flow family at every node, for a named parameter.
VectorField parameter_velocity_field(const AttractorMesh& mesh, const std::string& parameter);

// In-surface divergence l.dX/dl + s.dX/ds of a nodal vector field.
// Streamwise derivatives are centered in time over the uniform node grid
// (one-sided at the streamline ends) and converted to arclength through the
// local speed.  Spanwise derivatives difference to the index-matched node of
// the neighboring streamline and remove the streamwise component of the
// separation via alpha = sep.l_hat, beta = sep.s_hat:
//   dX/ds ~ (delta_X - alpha dX/dl) / beta,
// averaged over the forward and backward neighbors where both exist.  End
// streamlines and streamlines whose neighbor returns to the other quadrant
// (the branch seam, where the density is discontinuous) use the one-sided
// stencil away from the boundary.  Throws numerical_error when |beta| falls
// below 1e-10 (spanwise separation aligned with the flow).
SurfaceField surface_divergence(const AttractorMesh& mesh, const VectorField& X);

// Parameter sensitivity of the long-time average:
//   sum_k phi_k [div_s(rho_s df/dxi)]_k dA_k
// with the divergence evaluated on X = rho_s * df/dxi.  The reduction is an
// order-fixed serial sum.
//
// This node quadrature expresses only the in-surface density response; the
// contribution from displacement of the surface itself under the parameter
// (int rho (n.dX/dxi)(gradJ.n) dA, about 9% of the z0 answer for the
// canonical Lorenz surface) is outside its reach, and its spanwise stencils
// resolve the rough adjoint-times-density pairing to a few percent only.
// model_sensitivity below differences the same reduced model with all
// contributions included.
double sensitivity(const AttractorMesh& mesh, const SurfaceField& phi, const SurfaceField& rho,
                   const NodeAreas& areas, const VectorField& dfdxi);

struct ModelSensitivity {
  double value = 0.0;          // two-sided slope of the reduced model's mean
  double adjoint_value = 0.0;  // the same slope assembled from the section adjoint
  double delta = 0.0;          // parameter step used
  int flipped_lines = 0;       // lines excluded: return quadrant differs between sides
};

// Parameter derivative of the reduced section model by central differencing:
// re-traces the mesh's seed grid at parameter +/- delta against the same
// section chart (the plane height follows the perturbed system so the chart
// stays attached to the section), rebuilds the section operator, and
// differences.  `value` recomputes the stationary density on each side and
// differences the pipeline mean; `adjoint_value` reuses the base density and
// adjoint only:
//   dzbar = sum_i rho_i [ D_i (dJ_i - Jbar dT_i) + dD_i (J_i - Jbar T_i) ]
//           - psi^T (dP) rho,   psi = D .* phi0,
// exact for the differentiable model because (P^T - lambda) psi = D Jobj - v
// Jbar and psi^T rho = 0.  Differencing acts on single-return traces, so no
// chaotic amplification occurs.  Lines whose return quadrant differs between
// the two sides straddle the moving branch seam; they are excluded from the
// per-line sums and counted in `flipped_lines` (the operator difference
// keeps every line).  `value` is the reliable number: `adjoint_value` loses
// the seam-transport mass of the excluded lines, which matters for
// parameters that move the seam quickly (b) on coarse meshes.  Throws
// numerical_error when a perturbed trace fails; a smaller delta resolves
// that.
ModelSensitivity model_sensitivity(const AttractorMesh& mesh, const SectionDensity& dens,
                                   const SectionAdjoint& adj,
                                   const std::function<double(const Vec3&)>& J,
                                   const std::string& parameter, double delta = 0.01);

}  // namespace chaosadj
