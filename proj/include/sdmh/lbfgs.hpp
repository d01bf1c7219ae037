#pragma once

// Limited-memory BFGS minimiser with backtracking Armijo line search.
//
// The initial inverse-Hessian approximation defaults to the usual scalar
// s'y / y'y; callers that can afford one exact Hessian may pass its inverse
// instead, which makes the first step a Newton step.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>

#include "sdmh/linalg.hpp"

namespace sdmh {

struct LbfgsOptions {
  std::size_t memory = 8;
  std::size_t max_iterations = 200;
  std::size_t max_line_search = 40;
  double armijo = 1e-4;
  /// Converged when ||g||_inf <= grad_tol.
  double grad_tol = 1e-6;
  /// When no further descent is possible, the iterate is still accepted if
  /// ||g||_inf <= stall_tol * (1 + |f|).
  double stall_tol = 1e-6;
};

struct LbfgsResult {
  VectorXd x;
  double f = 0.0;
  VectorXd g;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  std::string message;
};

/// Returns f(x) and writes the gradient into `grad` (already sized).
using Objective = std::function<double(const VectorXd& x, VectorXd& grad)>;

LbfgsResult lbfgs_minimize(const Objective& objective, VectorXd x0, const LbfgsOptions& options,
                           const std::optional<MatrixXd>& h0_inverse = std::nullopt);

}  // namespace sdmh
