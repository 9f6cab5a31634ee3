#pragma once

// Fixed-parameter crash-frequency models: Poisson by Newton-Raphson with
// the analytic score and information, the Lagrange-multiplier
// over-dispersion test, and the NB2 negative binomial fallback.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lbv/design.hpp"

namespace lbv {

struct FitOptions {
  double grad_tol = 1e-8;    // max |score|
  double rel_f_tol = 1e-10;  // relative log-likelihood change
  int max_iterations = 100;
};

struct CoefRow {
  std::string name;  // display name (log columns as ln(...))
  double estimate = 0.0;
  double std_error = 0.0;
  double t_stat = 0.0;
};

struct ModelFit {
  std::string model_name;
  std::string family;  // "poisson" | "negbin"
  std::vector<CoefRow> coef;
  double loglik_zero = 0.0;  // intercept-only null
  double loglik_conv = 0.0;
  double rho2 = 0.0;  // McFadden pseudo-R^2
  std::optional<double> lm_stat;
  std::optional<bool> lm_poisson_ok;
  std::vector<double> fitted_lambda;
  bool converged = false;
  int iterations = 0;
  std::string trace;
  // negative binomial extras
  std::optional<double> alpha;
  std::optional<double> alpha_std_error;
  bool alpha_collapsed = false;  // dispersion driven to the Poisson boundary
};

// Poisson log-likelihood (with the ln y! constant) and analytic score,
// exposed for oracle tests.
double poisson_loglik(const DesignMatrix& d, const std::vector<double>& beta);
std::vector<double> poisson_score(const DesignMatrix& d, const std::vector<double>& beta);

// Closed-form intercept-only log-likelihood: beta0 = ln(mean response).
double poisson_loglik_null(const DesignMatrix& d);

ModelFit fit_poisson(const DesignMatrix& d, const FitOptions& options = {});

constexpr double kLmCritical = 3.84;  // chi-square(1), 95%

struct LmResult {
  double statistic = 0.0;
  bool poisson_ok = false;  // statistic < critical
};

// LM = [sum((y - mu)^2 - y)]^2 / (2 sum mu^2) with mu = fitted lambda.
LmResult lagrange_multiplier_test(const std::vector<int64_t>& y, const std::vector<double>& mu,
                                  double critical = kLmCritical);

ModelFit fit_negative_binomial(const DesignMatrix& d, const FitOptions& options = {});

double mcfadden_rho2(double loglik_zero, double loglik_conv);

// Average marginal effect of each non-constant column for a
// fixed-parameter fit: beta_k * mean(lambda).
std::vector<std::pair<std::string, double>> average_marginal_effects_fixed(
    const ModelFit& fit, const DesignMatrix& d);

}  // namespace lbv
