#include "lbv/randparam.hpp"

#include <algorithm>
#include <cmath>

#include "lbv/errors.hpp"
#include "lbv/kernels/kernels.hpp"
#include "lbv/linalg.hpp"
#include "lbv/mathfn.hpp"
#include "lbv/optim.hpp"
#include "lbv/parallel.hpp"
#include "lbv/rng.hpp"

namespace lbv {

std::vector<double> halton_sequence(uint64_t base, int64_t skip, int64_t n) {
  if (base < 2) throw ValidationError("halton base must be at least 2");
  if (n < 1) throw ValidationError("halton length must be positive");
  if (skip < 0) throw ValidationError("halton skip must be non-negative");
  std::vector<double> out;
  out.reserve(static_cast<size_t>(n));
  for (int64_t ix = skip + 1; ix <= skip + n; ++ix) {
    // integer radical inverse: exact numerator/denominator, one rounding
    uint64_t i = static_cast<uint64_t>(ix), num = 0, den = 1;
    while (i > 0) {
      num = num * base + i % base;
      den *= base;
      i /= base;
    }
    out.push_back(static_cast<double>(num) / static_cast<double>(den));
  }
  return out;
}

std::vector<uint64_t> first_primes(size_t k) {
  std::vector<uint64_t> out;
  for (uint64_t c = 2; out.size() < k; ++c) {
    bool prime = true;
    for (uint64_t p : out) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) out.push_back(c);
  }
  return out;
}

DrawSet build_draws(size_t n_obs, size_t n_random, int64_t draws, int64_t halton_skip,
                    uint64_t seed) {
  if (draws < 25) throw ValidationError("draw count must be at least 25");
  if (halton_skip < 0) throw ValidationError("halton skip must be non-negative");
  DrawSet ds;
  ds.n_obs = n_obs;
  ds.n_random = n_random;
  ds.draws = static_cast<size_t>(draws);
  if (n_obs == 0 || n_random == 0) return ds;

  std::vector<uint64_t> primes = first_primes(n_random);
  std::vector<std::vector<double>> h(n_random);
  for (size_t k = 0; k < n_random; ++k) h[k] = halton_sequence(primes[k], halton_skip, draws);

  ds.z.resize(n_obs * n_random * ds.draws);
  const double tiny = 0x1.0p-53;  // keep the quantile argument inside (0,1)
  parallel_chunks(n_obs, 64, [&](size_t, size_t b, size_t e) {
    for (size_t i = b; i < e; ++i) {
      for (size_t k = 0; k < n_random; ++k) {
        Rng rng = Rng::substream(seed, "halton_shift",
                                 static_cast<uint64_t>(i) * n_random + k);
        double shift = rng.uniform01();
        double* out = &ds.z[(i * n_random + k) * ds.draws];
        for (size_t r = 0; r < ds.draws; ++r) {
          double u = h[k][r] + shift;
          u -= std::floor(u);
          if (u < tiny) u = tiny;
          if (u > 1.0 - tiny) u = 1.0 - tiny;
          out[r] = normal_quantile(u);
        }
      }
    }
  });
  return ds;
}

namespace {

// theta_r = beta.x_i + sum_k sigma_k x_ik z_irk for one observation.
void fill_theta(const DesignMatrix& d, const std::vector<size_t>& rcols, const DrawSet& ds,
                const std::vector<double>& beta, const std::vector<double>& sigma, size_t i,
                std::vector<double>& theta) {
  const auto& ops = kernels::active();
  double base = 0.0;
  for (size_t j = 0; j < d.n_cols; ++j) base += beta[j] * d.at(i, j);
  std::fill(theta.begin(), theta.end(), base);
  for (size_t k = 0; k < rcols.size(); ++k)
    ops.axpy(sigma[k] * d.at(i, rcols[k]), ds.row(i, k), theta.data(), ds.draws);
}

}  // namespace

double simulated_loglik(const DesignMatrix& d, const std::vector<size_t>& random_cols,
                        const DrawSet& draws, const std::vector<double>& beta,
                        const std::vector<double>& sigma) {
  if (draws.n_obs != d.n_rows) throw ValidationError("draw set does not match the design rows");
  if (draws.n_random != random_cols.size())
    throw ValidationError("draw set does not match the random column count");
  if (sigma.size() != random_cols.size())
    throw ValidationError("sigma length does not match the random column count");
  if (beta.size() != d.n_cols) throw ValidationError("beta length does not match the design");
  const auto& ops = kernels::active();
  const size_t R = draws.draws;
  const double log_r = std::log(static_cast<double>(R));
  return parallel_sum(d.n_rows, 256, [&](size_t b, size_t e) {
    std::vector<double> theta(R), lp(R);
    double part = 0.0;
    for (size_t i = b; i < e; ++i) {
      fill_theta(d, random_cols, draws, beta, sigma, i, theta);
      double y = static_cast<double>(d.response[i]);
      ops.poisson_logprob(theta.data(), R, y, lp.data());
      double m = ops.reduce_max(lp.data(), R);
      double se = ops.sum_exp_minus(lp.data(), R, m);
      part += m + std::log(se) - log_r - std::lgamma(y + 1.0);
    }
    return part;
  });
}

namespace {

std::vector<double> simulated_mean_lambda(const DesignMatrix& d,
                                          const std::vector<size_t>& rcols, const DrawSet& ds,
                                          const std::vector<double>& beta,
                                          const std::vector<double>& sigma) {
  const auto& ops = kernels::active();
  const size_t R = ds.draws;
  std::vector<double> out(d.n_rows, 0.0);
  parallel_chunks(d.n_rows, 256, [&](size_t, size_t b, size_t e) {
    std::vector<double> theta(R), ex(R);
    for (size_t i = b; i < e; ++i) {
      fill_theta(d, rcols, ds, beta, sigma, i, theta);
      ops.exp_v(theta.data(), ex.data(), R);
      out[i] = ops.reduce_sum(ex.data(), R) / static_cast<double>(R);
    }
  });
  return out;
}

}  // namespace

FitOptions msl_default_options() {
  FitOptions o;
  o.grad_tol = 1e-5;
  return o;
}

RandomParamFit fit_random_poisson(const DesignMatrix& d, const RandomParamSpec& spec,
                                  const FitOptions& options) {
  std::vector<size_t> rcols;
  for (const std::string& name : spec.random_columns) {
    auto idx = d.column_index(name);
    if (!idx) throw ValidationError("random column '" + name + "' is not in the design");
    for (size_t prev : rcols)
      if (prev == *idx) throw ValidationError("random column '" + name + "' listed twice");
    rcols.push_back(*idx);
  }
  const size_t k = d.n_cols;
  const size_t K = rcols.size();

  ModelFit pois = fit_poisson(d);  // start values; also validates the design
  DrawSet ds = build_draws(d.n_rows, K, spec.draws, spec.halton_skip, spec.seed);
  const size_t R = ds.draws;

  // Packed parameters: [beta..., s_1..s_K] with sigma_k = exp(s_k).
  const double s_lo = std::log(1e-8), s_hi = std::log(1e3);
  auto objective = [&](const std::vector<double>& p) -> double {
    std::vector<double> beta(p.begin(), p.begin() + static_cast<long>(k));
    std::vector<double> sigma(K);
    for (size_t kk = 0; kk < K; ++kk) {
      double s = p[k + kk];
      if (s < s_lo || s > s_hi) return -1e300;
      sigma[kk] = std::exp(s);
    }
    double sll = simulated_loglik(d, rcols, ds, beta, sigma);
    return std::isfinite(sll) ? sll : -1e300;
  };
  auto gradient = [&](const std::vector<double>& p) {
    return numerical_gradient(objective, p, 1e-6);
  };

  std::vector<double> p0;
  for (const CoefRow& row : pois.coef) p0.push_back(row.estimate);
  for (size_t kk = 0; kk < K; ++kk) p0.push_back(std::log(0.1));

  OptimOptions oo;
  oo.grad_tol = options.grad_tol;
  oo.rel_f_tol = options.rel_f_tol;
  oo.max_iterations = options.max_iterations;
  oo.error_on_nonconvergence = false;
  OptimResult opt = bfgs_maximize(objective, gradient, std::move(p0), oo);
  if (!opt.converged) {
    // Near the sigma floor the finite-difference gradient spans the
    // out-of-bounds cliff and stops meaning anything; every spread at
    // the floor is the sigma -> 0 limit, which is the fixed fit.
    bool all_floored = K > 0;
    for (size_t kk = 0; kk < K; ++kk)
      if (std::exp(opt.x[k + kk]) >= 1e-4) all_floored = false;
    if (all_floored) {
      for (size_t j = 0; j < k; ++j) opt.x[j] = pois.coef[j].estimate;
      for (size_t kk = 0; kk < K; ++kk) opt.x[k + kk] = s_lo;
      opt.fx = objective(opt.x);
      opt.converged = true;
    } else {
      throw EstimationError("random-parameter fit did not converge in " +
                                std::to_string(oo.max_iterations) + " iterations",
                            opt.trace);
    }
  }

  RandomParamFit fit;
  fit.family = "random-poisson";
  fit.trace = opt.trace;
  fit.converged = opt.converged;
  fit.iterations = opt.iterations;
  fit.draws_used = static_cast<int64_t>(R);

  std::vector<double> beta(opt.x.begin(), opt.x.begin() + static_cast<long>(k));
  std::vector<double> sigma(K);
  std::vector<bool> collapsed(K);
  for (size_t kk = 0; kk < K; ++kk) {
    sigma[kk] = std::exp(opt.x[k + kk]);
    collapsed[kk] = sigma[kk] < 1e-4;
  }

  fit.fitted_lambda = simulated_mean_lambda(d, rcols, ds, beta, sigma);
  fit.loglik_conv = opt.fx;
  fit.loglik_zero = poisson_loglik_null(d);
  fit.rho2 = mcfadden_rho2(fit.loglik_zero, fit.loglik_conv);

  // Covariance from the numerical Hessian over the live directions; a
  // collapsed sigma sits on a flat boundary, so its dimension is held
  // fixed rather than inverted.
  std::vector<size_t> keep;
  for (size_t j = 0; j < k; ++j) keep.push_back(j);
  for (size_t kk = 0; kk < K; ++kk)
    if (!collapsed[kk]) keep.push_back(k + kk);

  std::vector<double> se_packed(k + K, 0.0);
  for (int attempt = 0; attempt < 2; ++attempt) {
    const size_t m = keep.size();
    auto reduced = [&](const std::vector<double>& xr) {
      std::vector<double> p(opt.x);
      for (size_t idx = 0; idx < m; ++idx) p[keep[idx]] = xr[idx];
      return objective(p);
    };
    std::vector<double> xr(m);
    for (size_t idx = 0; idx < m; ++idx) xr[idx] = opt.x[keep[idx]];
    std::vector<double> hess = numerical_hessian(reduced, xr);
    std::vector<double> neg(m * m);
    for (size_t i = 0; i < neg.size(); ++i) neg[i] = -hess[i];
    std::vector<double> lf(neg);
    if (cholesky_factor(lf, m) < 0) {
      std::vector<double> e(m, 0.0);
      for (size_t j = 0; j < m; ++j) {
        e[j] = 1.0;
        std::vector<double> col = cholesky_solve_factored(lf, m, e);
        se_packed[keep[j]] = std::sqrt(std::max(0.0, col[j]));
        e[j] = 0.0;
      }
      break;
    }
    if (attempt == 1 || keep.size() == k)
      throw EstimationError("simulated-likelihood information matrix is singular", fit.trace);
    keep.resize(k);  // retry with the mean coefficients alone
  }

  for (size_t j = 0; j < k; ++j) {
    CoefRow row;
    row.name = d.display_name(j);
    row.estimate = beta[j];
    row.std_error = se_packed[j];
    row.t_stat = row.std_error > 0.0 ? row.estimate / row.std_error : 0.0;
    fit.coef.push_back(std::move(row));
  }
  for (size_t kk = 0; kk < K; ++kk) {
    SdRow row;
    row.name = d.display_name(rcols[kk]);
    row.estimate = sigma[kk];
    row.collapsed = collapsed[kk];
    double se_s = se_packed[k + kk];
    if (!collapsed[kk] && se_s > 0.0) {
      row.std_error = sigma[kk] * se_s;  // delta method through exp
      row.t_stat = 1.0 / se_s;
    }
    fit.sd_rows.push_back(std::move(row));
  }
  fit.marginal_effects = average_marginal_effects(fit, d);
  return fit;
}

std::vector<std::pair<std::string, double>> average_marginal_effects(const RandomParamFit& fit,
                                                                     const DesignMatrix& d) {
  return average_marginal_effects_fixed(fit, d);
}

}  // namespace lbv
