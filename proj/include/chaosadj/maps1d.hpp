#pragma once

#include <string>

namespace chaosadj {

enum class MapKind { logistic, tent, cusp, sharp_cusp, param_cusp };
enum class Branch { left, right };

const char* to_string(MapKind kind);
MapKind map_kind_from_string(const std::string& name);

// Parameterized unimodal maps of [0,1] with the peak at x = 1/2:
//
//   logistic     F(x) = (4 - xi/4) x (1 - x)
//   tent         F(x) = (2 - xi/2) min(x, 1 - x)
//   cusp         F(x) = (1 - xi/4) (1 - |1/2 - x| - sqrt(|1/4 - x/2|))
//   sharp_cusp   F(x) = (1 - xi/4) (1 - |1/2 - x| - |1/4 - x/2|^0.3)
//   param_cusp   F(x) = 1 - xi |2x - 1| - (1 - xi) sqrt(|2x - 1|)
//
// xi scales the height of the first four families; param_cusp keeps the peak
// at 1 and blends between a square-root cusp (xi = 0) and the unit tent map
// (xi = 1).  The sharp_cusp formula dips below zero near the endpoints, so
// eval() clamps its output into [0,1]; the other families never need it.
class Map1D {
 public:
  Map1D(MapKind kind, double xi);

  MapKind kind() const { return kind_; }
  double xi() const { return xi_; }

  static constexpr double peak_x = 0.5;
  double peak_value() const;  // F(1/2)

  // F(x); throws std::domain_error for x outside [0,1].
  double eval(double x) const;

  // dF/dx; throws std::domain_error at x = 1/2 for families whose slope is
  // unbounded or discontinuous there (all but logistic).
  double slope(double x) const;

  // Slope evaluated a distance eps toward the given branch when x sits on the
  // peak, so callers that need the one-sided limit never hit the singularity.
  double slope_offside(double x, Branch branch, double eps) const;

  // Branch inverse of y: Newton with a bisection fallback.  Returns x with
  // |F(x) - y| <= tol, or the closest representable preimage when the branch
  // is so steep near the peak that no double can meet tol (the bracketing
  // interval is then at machine granularity, so x errs by at most a few ulp).
  double invert(double y, Branch branch, double tol = 1e-12) const;

  // dF/dxi at fixed x.
  double param_derivative(double x) const;

  // True when both F and dF/dxi are symmetric about x = 1/2 (holds for all
  // five families); gates the symmetric sensitivity quadrature.
  bool symmetric_about_half() const { return true; }

 private:
  double raw_eval(double x) const;  // formula value without the [0,1] clamp

  MapKind kind_;
  double xi_;
};

}  // namespace chaosadj
