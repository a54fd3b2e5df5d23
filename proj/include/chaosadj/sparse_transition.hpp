#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace chaosadj {

// Row-sparse nonnegative transition matrix acting on discrete densities:
// (P rho)_i = sum_j w_ij rho_j.  Shared by the 1D transfer operators and the
// Poincare-section operator.
class SparseTransition {
 public:
  struct Entry {
    int col;
    double w;
  };

  explicit SparseTransition(int n) : rows_(static_cast<std::size_t>(n)) {}

  int size() const { return static_cast<int>(rows_.size()); }

  // Accumulates w into (row, col); entries with w == 0 are dropped.
  void add(int row, int col, double w);

  const std::vector<Entry>& row(int i) const { return rows_[static_cast<std::size_t>(i)]; }

  std::vector<double> apply(const std::vector<double>& x) const;
  std::vector<double> apply_transpose(const std::vector<double>& x) const;

  std::size_t nonzeros() const;
  int max_row_entries() const;

  // Leading eigenvalue, filled in by the first spectral solve on this matrix.
  mutable std::optional<double> lambda_hint;

 private:
  std::vector<std::vector<Entry>> rows_;
};

struct PowerIterationResult {
  std::vector<double> vec;  // scaled so its mean is 1
  double lambda = 0.0;      // growth ratio of the mean at the last iteration
  int iterations = 0;
  double residual = 0.0;  // max-norm change of the scaled iterate
  bool converged = false;
};

// Power iteration with a mean-1 rescale after every application.  Set
// transpose=true to iterate on P^T (left eigenvector).
PowerIterationResult power_iteration(const SparseTransition& P, bool transpose,
                                     std::vector<double> start, int max_iters,
                                     double tol);

}  // namespace chaosadj
