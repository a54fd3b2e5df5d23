#pragma once

#include <stdexcept>

namespace chaosadj {

// Numerical failure: non-convergence, singular system, integration timeout,
// degenerate geometry.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent run configuration.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Failure to read or write an artifact.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace chaosadj
