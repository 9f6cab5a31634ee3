#include "lbv/countmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "lbv/errors.hpp"
#include "lbv/kernels/kernels.hpp"
#include "lbv/linalg.hpp"
#include "lbv/optim.hpp"

namespace lbv {

namespace {

void check_shape(const DesignMatrix& d) {
  if (d.n_rows == 0) throw ValidationError("empty design matrix");
  if (d.n_cols == 0) throw ValidationError("design matrix has no columns");
  if (d.response.size() != d.n_rows)
    throw ValidationError("response length does not match design rows");
  for (int64_t y : d.response)
    if (y < 0) throw ValidationError("negative response count in design");
}

double response_mean(const DesignMatrix& d) {
  double s = 0.0;
  for (int64_t y : d.response) s += static_cast<double>(y);
  return s / static_cast<double>(d.n_rows);
}

std::vector<double> linear_predictor(const DesignMatrix& d, const std::vector<double>& beta) {
  return matvec(d.x, d.n_rows, d.n_cols, beta);
}

std::vector<double> exp_all(const std::vector<double>& eta) {
  std::vector<double> lam(eta.size());
  kernels::active().exp_v(eta.data(), lam.data(), eta.size());
  return lam;
}

double loglik_from(const DesignMatrix& d, const std::vector<double>& eta,
                   const std::vector<double>& lam) {
  double ll = 0.0;
  for (size_t i = 0; i < d.n_rows; ++i) {
    double y = static_cast<double>(d.response[i]);
    ll += y * eta[i] - lam[i] - std::lgamma(y + 1.0);
  }
  return ll;
}

void trace_line(std::string& trace, int iter, double f, double gmax, double step) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "iter=%d f=%.10g gmax=%.3g step=%.3g\n", iter, f, gmax, step);
  trace += buf;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Factor an SPD matrix, naming the offending design column if a pivot
// fails (the usual cause is collinear covariates).
std::vector<double> factor_named(const std::vector<double>& a, size_t k, const DesignMatrix& d,
                                 const std::string& trace) {
  std::vector<double> l(a);
  int pivot = cholesky_factor(l, k);
  if (pivot >= 0)
    throw EstimationError("design matrix is rank deficient: column '" +
                              d.display_name(static_cast<size_t>(pivot)) +
                              "' is collinear with earlier columns",
                          trace);
  return l;
}

std::vector<double> inverse_from_factor(const std::vector<double>& l, size_t k) {
  std::vector<double> inv(k * k, 0.0);
  std::vector<double> e(k, 0.0);
  for (size_t j = 0; j < k; ++j) {
    e[j] = 1.0;
    std::vector<double> col = cholesky_solve_factored(l, k, e);
    for (size_t i = 0; i < k; ++i) inv[i * k + j] = col[i];
    e[j] = 0.0;
  }
  return inv;
}

}  // namespace

double poisson_loglik(const DesignMatrix& d, const std::vector<double>& beta) {
  check_shape(d);
  auto eta = linear_predictor(d, beta);
  auto lam = exp_all(eta);
  return loglik_from(d, eta, lam);
}

std::vector<double> poisson_score(const DesignMatrix& d, const std::vector<double>& beta) {
  check_shape(d);
  auto eta = linear_predictor(d, beta);
  auto lam = exp_all(eta);
  std::vector<double> g(d.n_cols, 0.0);
  for (size_t i = 0; i < d.n_rows; ++i) {
    double r = static_cast<double>(d.response[i]) - lam[i];
    for (size_t j = 0; j < d.n_cols; ++j) g[j] += r * d.at(i, j);
  }
  return g;
}

double poisson_loglik_null(const DesignMatrix& d) {
  check_shape(d);
  const double ybar = response_mean(d);
  if (!(ybar > 0.0))
    throw ValidationError("response is all zeros; the null Poisson mean is degenerate");
  double sum_y = 0.0, lfac = 0.0;
  for (int64_t y : d.response) {
    sum_y += static_cast<double>(y);
    lfac += std::lgamma(static_cast<double>(y) + 1.0);
  }
  return sum_y * std::log(ybar) - static_cast<double>(d.n_rows) * ybar - lfac;
}

ModelFit fit_poisson(const DesignMatrix& d, const FitOptions& options) {
  check_shape(d);
  const size_t n = d.n_rows, k = d.n_cols;
  const double ybar = response_mean(d);
  if (!(ybar > 0.0))
    throw ValidationError("response is all zeros; a Poisson rate cannot be estimated");

  std::vector<double> beta(k, 0.0);
  beta[0] = std::log(ybar);  // first column is the constant

  auto eta = linear_predictor(d, beta);
  auto lam = exp_all(eta);
  double ll = loglik_from(d, eta, lam);

  ModelFit fit;
  fit.family = "poisson";
  std::string& trace = fit.trace;

  std::vector<double> g(k), info(k * k);
  auto fill_score_info = [&] {
    std::fill(g.begin(), g.end(), 0.0);
    std::fill(info.begin(), info.end(), 0.0);
    for (size_t i = 0; i < n; ++i) {
      double r = static_cast<double>(d.response[i]) - lam[i];
      double w = lam[i];
      for (size_t a = 0; a < k; ++a) {
        double xa = d.at(i, a);
        g[a] += r * xa;
        for (size_t b = a; b < k; ++b) info[a * k + b] += w * xa * d.at(i, b);
      }
    }
    for (size_t a = 0; a < k; ++a)
      for (size_t b = 0; b < a; ++b) info[a * k + b] = info[b * k + a];
  };

  fill_score_info();
  double gmax = max_abs(g);
  trace_line(trace, 0, ll, gmax, 0.0);
  bool converged = gmax < options.grad_tol;  // the start can already be the optimum
  int iterations = 0;

  for (int iter = 1; !converged && iter <= options.max_iterations; ++iter) {
    std::vector<double> lfac = factor_named(info, k, d, trace);
    std::vector<double> delta = cholesky_solve_factored(lfac, k, g);

    double step = 1.0;
    std::vector<double> beta_new(k), eta_new, lam_new;
    double ll_new = -std::numeric_limits<double>::infinity();
    bool improved = false;
    // once the true gain falls below the rounding granularity of the
    // log-likelihood, the comparison is noise; allow that much slack so
    // the final full Newton steps are not rejected
    const double ll_noise =
        16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(ll));
    for (int half = 0; half < 60; ++half) {
      for (size_t j = 0; j < k; ++j) beta_new[j] = beta[j] + step * delta[j];
      eta_new = linear_predictor(d, beta_new);
      lam_new = exp_all(eta_new);
      ll_new = loglik_from(d, eta_new, lam_new);
      if (std::isfinite(ll_new) && ll_new >= ll - ll_noise) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {  // no ascent at machine scale; flat score means done
      iterations = iter;
      trace_line(trace, iter, ll, gmax, 0.0);
      converged = gmax < options.grad_tol;
      break;
    }

    double ll_old = ll;
    beta = std::move(beta_new);
    eta = std::move(eta_new);
    lam = std::move(lam_new);
    ll = ll_new;
    fill_score_info();
    gmax = max_abs(g);
    iterations = iter;
    trace_line(trace, iter, ll, gmax, step);

    double rel_change = std::abs(ll - ll_old) / (std::abs(ll_old) + 1e-12);
    if (gmax < options.grad_tol && rel_change < options.rel_f_tol) converged = true;
  }

  if (!converged)
    throw EstimationError("Poisson fit did not converge in " +
                              std::to_string(options.max_iterations) + " iterations",
                          trace);

  std::vector<double> lfac = factor_named(info, k, d, trace);
  std::vector<double> cov = inverse_from_factor(lfac, k);
  for (size_t j = 0; j < k; ++j) {
    CoefRow row;
    row.name = d.display_name(j);
    row.estimate = beta[j];
    row.std_error = std::sqrt(std::max(0.0, cov[j * k + j]));
    row.t_stat = row.std_error > 0.0 ? row.estimate / row.std_error : 0.0;
    fit.coef.push_back(std::move(row));
  }
  fit.loglik_zero = poisson_loglik_null(d);
  fit.loglik_conv = ll;
  fit.rho2 = mcfadden_rho2(fit.loglik_zero, fit.loglik_conv);
  fit.fitted_lambda = std::move(lam);
  fit.converged = true;
  fit.iterations = iterations;

  LmResult lm = lagrange_multiplier_test(d.response, fit.fitted_lambda);
  fit.lm_stat = lm.statistic;
  fit.lm_poisson_ok = lm.poisson_ok;
  return fit;
}

LmResult lagrange_multiplier_test(const std::vector<int64_t>& y, const std::vector<double>& mu,
                                  double critical) {
  if (y.size() != mu.size())
    throw ValidationError("dispersion test: response and fitted-mean lengths differ");
  if (y.empty()) throw ValidationError("dispersion test: empty input");
  double num = 0.0, denom = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    double r = static_cast<double>(y[i]) - mu[i];
    num += r * r - static_cast<double>(y[i]);
    denom += mu[i] * mu[i];
  }
  if (!(denom > 0.0)) throw ValidationError("dispersion test: all fitted means are zero");
  LmResult res;
  res.statistic = num * num / (2.0 * denom);
  res.poisson_ok = res.statistic < critical;
  return res;
}

ModelFit fit_negative_binomial(const DesignMatrix& d, const FitOptions& options) {
  check_shape(d);
  const size_t n = d.n_rows, k = d.n_cols;

  ModelFit start = fit_poisson(d, options);

  // Parameters: [beta..., s] with alpha = exp(s); r = 1/alpha is the NB2
  // shape. Soft box on s keeps the optimizer on the numerically sane
  // range; outside it the objective is a floor, which backtracking
  // rejects. For integer counts the Gamma ratios reduce to short exact
  // sums, which keeps the likelihood and score cancellation-free as r
  // grows toward the Poisson boundary.
  const double s_lo = std::log(1e-8), s_hi = std::log(1e4);

  auto loglik = [&](const std::vector<double>& p) -> double {
    double s = p[k];
    if (s < s_lo || s > s_hi) return -1e300;
    double alpha = std::exp(s), r = 1.0 / alpha;
    std::vector<double> beta(p.begin(), p.begin() + static_cast<long>(k));
    auto eta = linear_predictor(d, beta);
    auto lam = exp_all(eta);
    double ll = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double y = static_cast<double>(d.response[i]);
      double mu = lam[i];
      if (!(mu > 0.0) || !std::isfinite(mu)) return -1e300;
      double lg_ratio = 0.0;  // ln Gamma(y+r) - ln Gamma(r), y integer
      for (int64_t m = 0; m < d.response[i]; ++m) lg_ratio += std::log(r + static_cast<double>(m));
      ll += lg_ratio - std::lgamma(y + 1.0) - r * std::log1p(alpha * mu) +
            y * (eta[i] - std::log(r + mu));
    }
    return std::isfinite(ll) ? ll : -1e300;
  };

  auto gradient = [&](const std::vector<double>& p) -> std::vector<double> {
    double s = std::clamp(p[k], s_lo, s_hi);
    double alpha = std::exp(s), r = 1.0 / alpha;
    std::vector<double> beta(p.begin(), p.begin() + static_cast<long>(k));
    auto eta = linear_predictor(d, beta);
    auto lam = exp_all(eta);
    std::vector<double> g(k + 1, 0.0);
    for (size_t i = 0; i < n; ++i) {
      double y = static_cast<double>(d.response[i]);
      double mu = lam[i];
      double common = (y - mu) / (1.0 + alpha * mu);
      for (size_t j = 0; j < k; ++j) g[j] += common * d.at(i, j);
      double dpsi = 0.0;  // digamma(y+r) - digamma(r), y integer
      for (int64_t m = 0; m < d.response[i]; ++m) dpsi += 1.0 / (r + static_cast<double>(m));
      double dll_dr = dpsi - std::log1p(alpha * mu) + (mu - y) / (r + mu);
      g[k] += -r * dll_dr;  // chain rule through r = exp(-s)
    }
    return g;
  };

  std::vector<double> p0;
  for (const CoefRow& row : start.coef) p0.push_back(row.estimate);
  p0.push_back(std::log(0.1));

  OptimOptions oo;
  oo.grad_tol = options.grad_tol;
  oo.rel_f_tol = options.rel_f_tol;
  oo.max_iterations = options.max_iterations;
  oo.error_on_nonconvergence = false;
  OptimResult opt = bfgs_maximize(loglik, gradient, std::move(p0), oo);

  if (!opt.converged) {
    // At the Poisson boundary the dispersion gradient is alpha-scaled
    // and cannot reach the interior tolerance; when the optimizer was
    // driven against the lower bound, the alpha->0 limit IS the fit.
    if (std::exp(opt.x[k]) < 1e-4) {
      for (size_t j = 0; j < k; ++j) opt.x[j] = start.coef[j].estimate;
      opt.x[k] = s_lo;
      opt.fx = loglik(opt.x);
      opt.converged = true;
    } else {
      throw EstimationError("negative binomial fit did not converge in " +
                                std::to_string(options.max_iterations) + " iterations",
                            opt.trace);
    }
  }

  ModelFit fit;
  fit.family = "negbin";
  fit.trace = opt.trace;
  fit.converged = opt.converged;
  fit.iterations = opt.iterations;

  std::vector<double> beta(opt.x.begin(), opt.x.begin() + static_cast<long>(k));
  double s_hat = opt.x[k];
  double alpha_hat = std::exp(s_hat);
  fit.alpha = alpha_hat;
  fit.alpha_collapsed = alpha_hat < 1e-4;

  auto eta = linear_predictor(d, beta);
  fit.fitted_lambda = exp_all(eta);
  fit.loglik_conv = opt.fx;
  fit.loglik_zero = poisson_loglik_null(d);
  fit.rho2 = mcfadden_rho2(fit.loglik_zero, fit.loglik_conv);

  // Standard errors from the observed information. At the Poisson
  // boundary the dispersion direction is flat, so fall back to the
  // beta block alone and leave the alpha SE unset.
  std::vector<double> se(k, 0.0);
  bool have_full = false;
  if (!fit.alpha_collapsed) {
    std::vector<double> hess = numerical_hessian(loglik, opt.x);
    std::vector<double> neg((k + 1) * (k + 1));
    for (size_t i = 0; i < neg.size(); ++i) neg[i] = -hess[i];
    std::vector<double> lf(neg);
    if (cholesky_factor(lf, k + 1) < 0) {
      std::vector<double> cov = inverse_from_factor(lf, k + 1);
      for (size_t j = 0; j < k; ++j) se[j] = std::sqrt(std::max(0.0, cov[j * (k + 1) + j]));
      double se_s = std::sqrt(std::max(0.0, cov[k * (k + 1) + k]));
      fit.alpha_std_error = alpha_hat * se_s;  // delta method through exp
      have_full = true;
    }
  }
  if (!have_full) {
    auto ll_beta = [&](const std::vector<double>& b) {
      std::vector<double> p(b);
      p.push_back(s_hat);
      return loglik(p);
    };
    std::vector<double> hess = numerical_hessian(ll_beta, beta);
    std::vector<double> neg(k * k);
    for (size_t i = 0; i < neg.size(); ++i) neg[i] = -hess[i];
    std::vector<double> lf = factor_named(neg, k, d, fit.trace);
    std::vector<double> cov = inverse_from_factor(lf, k);
    for (size_t j = 0; j < k; ++j) se[j] = std::sqrt(std::max(0.0, cov[j * k + j]));
  }

  for (size_t j = 0; j < k; ++j) {
    CoefRow row;
    row.name = d.display_name(j);
    row.estimate = beta[j];
    row.std_error = se[j];
    row.t_stat = row.std_error > 0.0 ? row.estimate / row.std_error : 0.0;
    fit.coef.push_back(std::move(row));
  }
  return fit;
}

double mcfadden_rho2(double loglik_zero, double loglik_conv) {
  if (!std::isfinite(loglik_zero) || !std::isfinite(loglik_conv))
    throw ValidationError("pseudo-R^2 requires finite log-likelihoods");
  if (!(loglik_zero < 0.0)) throw ValidationError("pseudo-R^2 requires a negative null log-likelihood");
  return 1.0 - loglik_conv / loglik_zero;
}

std::vector<std::pair<std::string, double>> average_marginal_effects_fixed(
    const ModelFit& fit, const DesignMatrix& d) {
  if (!fit.converged) throw ValidationError("marginal effects require a converged fit");
  if (fit.fitted_lambda.size() != d.n_rows)
    throw ValidationError("marginal effects: fit does not match the design");
  double lbar = kernels::active().reduce_sum(fit.fitted_lambda.data(), d.n_rows) /
                static_cast<double>(d.n_rows);
  std::vector<std::pair<std::string, double>> out;
  for (size_t j = 1; j < d.n_cols; ++j)
    out.emplace_back(d.display_name(j), fit.coef[j].estimate * lbar);
  return out;
}

}  // namespace lbv
