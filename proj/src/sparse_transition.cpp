#include "chaosadj/sparse_transition.hpp"

#include <algorithm>
#include <cmath>

#include "chaosadj/errors.hpp"

namespace chaosadj {

void SparseTransition::add(int row, int col, double w) {
  if (w == 0.0) return;
  auto& r = rows_[static_cast<std::size_t>(row)];
  for (auto& e : r) {
    if (e.col == col) {
      e.w += w;
      return;
    }
  }
  r.push_back({col, w});
}

std::vector<double> SparseTransition::apply(const std::vector<double>& x) const {
  std::vector<double> y(rows_.size(), 0.0);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    double acc = 0.0;
    for (const auto& e : rows_[i]) acc += e.w * x[static_cast<std::size_t>(e.col)];
    y[i] = acc;
  }
  return y;
}

std::vector<double> SparseTransition::apply_transpose(const std::vector<double>& x) const {
  std::vector<double> y(rows_.size(), 0.0);
  for (std::size_t i = 0; i < rows_.size(); ++i)
    for (const auto& e : rows_[i]) y[static_cast<std::size_t>(e.col)] += e.w * x[i];
  return y;
}

std::size_t SparseTransition::nonzeros() const {
  std::size_t n = 0;
  for (const auto& r : rows_) n += r.size();
  return n;
}

int SparseTransition::max_row_entries() const {
  std::size_t m = 0;
  for (const auto& r : rows_) m = std::max(m, r.size());
  return static_cast<int>(m);
}

PowerIterationResult power_iteration(const SparseTransition& P, bool transpose,
                                     std::vector<double> start, int max_iters,
                                     double tol) {
  const std::size_t n = start.size();
  if (static_cast<int>(n) != P.size())
    throw numerical_error("power iteration start vector has wrong size");

  auto mean = [n](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(n);
  };

  PowerIterationResult out;
  double m0 = mean(start);
  if (!(std::abs(m0) > 0.0)) throw numerical_error("power iteration start has zero mean");
  for (double& x : start) x /= m0;

  out.vec = std::move(start);
  for (int it = 1; it <= max_iters; ++it) {
    std::vector<double> next = transpose ? P.apply_transpose(out.vec) : P.apply(out.vec);
    double growth = mean(next);  // mean(out.vec) == 1 after rescaling
    if (!(std::abs(growth) > 0.0) || !std::isfinite(growth))
      throw numerical_error("power iteration collapsed to zero mean");
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] /= growth;
      res = std::max(res, std::abs(next[i] - out.vec[i]));
    }
    out.vec = std::move(next);
    out.lambda = growth;
    out.iterations = it;
    out.residual = res;
    if (res < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace chaosadj
