#pragma once

// Quasi-Newton maximization for the likelihoods that lack a practical
// analytic Hessian (negative binomial, simulated likelihood). BFGS on
// the negated objective with Armijo backtracking; every iteration is
// logged so a failed fit carries its trace.

#include <functional>
#include <string>
#include <vector>

namespace lbv {

using ObjectiveFn = std::function<double(const std::vector<double>&)>;
using GradientFn = std::function<std::vector<double>(const std::vector<double>&)>;

struct OptimOptions {
  double grad_tol = 1e-8;       // max-norm of the gradient
  double rel_f_tol = 1e-10;     // relative objective change
  int max_iterations = 100;
  bool error_on_nonconvergence = true;
};

struct OptimResult {
  std::vector<double> x;
  double fx = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string trace;
};

// Maximizes f. Throws EstimationError (with the trace) on
// non-convergence unless options say otherwise.
OptimResult bfgs_maximize(const ObjectiveFn& f, const GradientFn& grad,
                          std::vector<double> x0, const OptimOptions& options);

// Central finite differences with per-coordinate step rel_step *
// max(1, |x_j|).
std::vector<double> numerical_gradient(const ObjectiveFn& f, const std::vector<double>& x,
                                       double rel_step = 1e-6);

// Dense symmetric numerical Hessian by central second differences.
std::vector<double> numerical_hessian(const ObjectiveFn& f, const std::vector<double>& x,
                                      double rel_step = 1e-5);

}  // namespace lbv
