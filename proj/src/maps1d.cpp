#include "chaosadj/maps1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "chaosadj/errors.hpp"

namespace chaosadj {

const char* to_string(MapKind kind) {
  switch (kind) {
    case MapKind::logistic: return "logistic";
    case MapKind::tent: return "tent";
    case MapKind::cusp: return "cusp";
    case MapKind::sharp_cusp: return "sharp_cusp";
    case MapKind::param_cusp: return "param_cusp";
  }
  return "?";
}

MapKind map_kind_from_string(const std::string& name) {
  if (name == "logistic") return MapKind::logistic;
  if (name == "tent") return MapKind::tent;
  if (name == "cusp") return MapKind::cusp;
  if (name == "sharp_cusp") return MapKind::sharp_cusp;
  if (name == "param_cusp") return MapKind::param_cusp;
  throw config_error("unknown map family: " + name);
}

Map1D::Map1D(MapKind kind, double xi) : kind_(kind), xi_(xi) {
  bool ok = false;
  switch (kind_) {
    case MapKind::param_cusp:
      ok = xi >= 0.0 && xi <= 1.0;
      break;
    case MapKind::logistic:
      ok = xi >= 0.0 && xi <= 16.0;
      break;
    case MapKind::tent:
    case MapKind::cusp:
    case MapKind::sharp_cusp:
      ok = xi >= 0.0 && xi <= 4.0;
      break;
  }
  if (!ok) throw std::domain_error("map parameter xi out of admissible range");
}

double Map1D::peak_value() const {
  switch (kind_) {
    case MapKind::logistic: return (4.0 - xi_ / 4.0) / 4.0;
    case MapKind::tent: return (2.0 - xi_ / 2.0) / 2.0;
    case MapKind::cusp:
    case MapKind::sharp_cusp: return 1.0 - xi_ / 4.0;
    case MapKind::param_cusp: return 1.0;
  }
  return 0.0;
}

double Map1D::raw_eval(double x) const {
  switch (kind_) {
    case MapKind::logistic:
      return (4.0 - xi_ / 4.0) * x * (1.0 - x);
    case MapKind::tent:
      return (2.0 - xi_ / 2.0) * std::min(x, 1.0 - x);
    case MapKind::cusp:
      return (1.0 - xi_ / 4.0) *
             (1.0 - std::abs(0.5 - x) - std::sqrt(std::abs(0.25 - 0.5 * x)));
    case MapKind::sharp_cusp:
      return (1.0 - xi_ / 4.0) *
             (1.0 - std::abs(0.5 - x) - std::pow(std::abs(0.25 - 0.5 * x), 0.3));
    case MapKind::param_cusp: {
      double w = std::abs(2.0 * x - 1.0);
      return 1.0 - xi_ * w - (1.0 - xi_) * std::sqrt(w);
    }
  }
  return 0.0;
}

double Map1D::eval(double x) const {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("map argument outside [0,1]");
  return std::clamp(raw_eval(x), 0.0, 1.0);
}

double Map1D::slope(double x) const {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("map argument outside [0,1]");
  double u = x - 0.5;  // sign of u selects the branch
  if (u == 0.0 && kind_ != MapKind::logistic)
    throw std::domain_error("map slope undefined at the peak x = 1/2");
  double sgn = (u > 0.0) ? 1.0 : -1.0;
  switch (kind_) {
    case MapKind::logistic:
      return (4.0 - xi_ / 4.0) * (1.0 - 2.0 * x);
    case MapKind::tent:
      return -sgn * (2.0 - xi_ / 2.0);
    case MapKind::cusp: {
      double m = 0.5 * std::abs(u);  // |1/4 - x/2|
      return -(1.0 - xi_ / 4.0) * sgn * (1.0 + 0.25 / std::sqrt(m));
    }
    case MapKind::sharp_cusp: {
      double m = 0.5 * std::abs(u);
      return -(1.0 - xi_ / 4.0) * sgn * (1.0 + 0.15 * std::pow(m, -0.7));
    }
    case MapKind::param_cusp: {
      double w = 2.0 * std::abs(u);  // |2x - 1|
      return -sgn * (2.0 * xi_ + (1.0 - xi_) / std::sqrt(w));
    }
  }
  return 0.0;
}

double Map1D::slope_offside(double x, Branch branch, double eps) const {
  if (std::abs(x - peak_x) < eps)
    x = (branch == Branch::left) ? peak_x - eps : peak_x + eps;
  return slope(x);
}

double Map1D::invert(double y, Branch branch, double tol) const {
  const double fp = peak_value();
  double lo = (branch == Branch::left) ? 0.0 : 0.5;
  double hi = (branch == Branch::left) ? 0.5 : 1.0;
  double end_value = raw_eval(branch == Branch::left ? 0.0 : 1.0);
  if (y > fp + 1e-12 || y < end_value - 1e-12)
    throw std::domain_error("inverse target outside branch range");
  if (y >= fp) return peak_x;
  y = std::max(y, end_value);

  // Left branch is increasing, right branch decreasing.
  const bool increasing = branch == Branch::left;
  double x = increasing ? 0.25 : 0.75;
  for (int it = 0; it < 200; ++it) {
    double fx = raw_eval(x) - y;
    if (std::abs(fx) <= tol) return x;
    if ((fx < 0.0) == increasing)
      lo = x;
    else
      hi = x;
    // Bracket at machine granularity: x is the closest representable
    // preimage even when the branch is too steep to push |F(x) - y| under
    // tol (near a cusp peak the preimage offset can be far below one ulp).
    if (hi - lo <= std::numeric_limits<double>::epsilon() * std::max(1.0, hi))
      return x;
    double next = x;
    if (x != peak_x) {
      double d = slope(x);
      if (std::isfinite(d) && std::abs(d) > 1e-300) next = x - fx / d;
    }
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x) next = 0.5 * (lo + hi);
    x = next;
  }
  throw numerical_error("branch inversion did not converge");
}

double Map1D::param_derivative(double x) const {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("map argument outside [0,1]");
  switch (kind_) {
    case MapKind::logistic:
      return -0.25 * x * (1.0 - x);
    case MapKind::tent:
      return -0.5 * std::min(x, 1.0 - x);
    case MapKind::cusp:
      return -0.25 * (1.0 - std::abs(0.5 - x) - std::sqrt(std::abs(0.25 - 0.5 * x)));
    case MapKind::sharp_cusp:
      return -0.25 *
             (1.0 - std::abs(0.5 - x) - std::pow(std::abs(0.25 - 0.5 * x), 0.3));
    case MapKind::param_cusp: {
      double w = std::abs(2.0 * x - 1.0);
      return -w + std::sqrt(w);
    }
  }
  return 0.0;
}

}  // namespace chaosadj
