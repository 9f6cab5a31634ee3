#include "lbv/optim.hpp"

#include <cmath>
#include <cstdio>

#include "lbv/errors.hpp"

namespace lbv {

namespace {

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void trace_line(std::string& trace, int iter, double f, double gmax, double step) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "iter=%d f=%.10g gmax=%.3g step=%.3g\n", iter, f, gmax, step);
  trace += buf;
}

}  // namespace

OptimResult bfgs_maximize(const ObjectiveFn& f, const GradientFn& grad,
                          std::vector<double> x0, const OptimOptions& options) {
  const size_t n = x0.size();
  OptimResult res;
  res.x = std::move(x0);
  res.fx = f(res.x);
  std::vector<double> g = grad(res.x);

  // Inverse-Hessian approximation of the negated (minimized) objective.
  std::vector<double> h(n * n, 0.0);
  auto reset_h = [&] {
    std::fill(h.begin(), h.end(), 0.0);
    for (size_t i = 0; i < n; ++i) h[i * n + i] = 1.0;
  };
  reset_h();

  double gmax = max_abs(g);
  trace_line(res.trace, 0, res.fx, gmax, 0.0);
  if (gmax < options.grad_tol) {
    res.converged = true;
    return res;
  }

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    // Ascent direction d = H * g (H approximates (-f'')^{-1}).
    std::vector<double> d(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (size_t j = 0; j < n; ++j) s += h[i * n + j] * g[j];
      d[i] = s;
    }
    double slope = 0.0;
    for (size_t i = 0; i < n; ++i) slope += d[i] * g[i];
    if (!(slope > 0.0)) {  // stale curvature; fall back to steepest ascent
      reset_h();
      d = g;
      slope = 0.0;
      for (size_t i = 0; i < n; ++i) slope += g[i] * g[i];
    }

    double step = 1.0;
    std::vector<double> x_new(n);
    double f_new = 0.0;
    bool improved = false;
    // Armijo, with slack for the rounding granularity of f: near the
    // optimum the true gain of a full step is below one ulp of f, and
    // without the slack the search rejects every productive step.
    const double f_noise =
        16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(res.fx));
    for (int half = 0; half < 40; ++half) {
      for (size_t i = 0; i < n; ++i) x_new[i] = res.x[i] + step * d[i];
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new >= res.fx + 1e-4 * step * slope - f_noise) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      // No ascent left at machine scale; converged iff the score is flat.
      res.converged = gmax < options.grad_tol;
      res.iterations = iter;
      trace_line(res.trace, iter, res.fx, gmax, 0.0);
      break;
    }

    std::vector<double> g_new = grad(x_new);
    double f_old = res.fx;

    // BFGS update on the minimized problem: s = step*d, y = -(g_new - g).
    std::vector<double> s(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - res.x[i];
      y[i] = g[i] - g_new[i];
    }
    double sy = 0.0;
    for (size_t i = 0; i < n; ++i) sy += s[i] * y[i];
    if (sy > 1e-12) {
      double rho = 1.0 / sy;
      // H = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      std::vector<double> hy(n, 0.0);
      for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) hy[i] += h[i * n + j] * y[j];
      double yhy = 0.0;
      for (size_t i = 0; i < n; ++i) yhy += y[i] * hy[i];
      for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
          h[i * n + j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) +
                          rho * (1.0 + rho * yhy) * s[i] * s[j];
        }
      }
    }

    res.x = x_new;
    res.fx = f_new;
    g = std::move(g_new);
    gmax = max_abs(g);
    res.iterations = iter;
    trace_line(res.trace, iter, res.fx, gmax, step);

    double rel_change = std::abs(res.fx - f_old) / (std::abs(f_old) + 1e-12);
    if (gmax < options.grad_tol && rel_change < options.rel_f_tol) {
      res.converged = true;
      break;
    }
  }

  if (!res.converged && options.error_on_nonconvergence)
    throw EstimationError("optimizer did not converge in " +
                              std::to_string(options.max_iterations) + " iterations",
                          res.trace);
  return res;
}

std::vector<double> numerical_gradient(const ObjectiveFn& f, const std::vector<double>& x,
                                       double rel_step) {
  std::vector<double> g(x.size(), 0.0);
  std::vector<double> p(x);
  for (size_t j = 0; j < x.size(); ++j) {
    double h = rel_step * std::max(1.0, std::abs(x[j]));
    p[j] = x[j] + h;
    double fp = f(p);
    p[j] = x[j] - h;
    double fm = f(p);
    p[j] = x[j];
    g[j] = (fp - fm) / (2.0 * h);
  }
  return g;
}

std::vector<double> numerical_hessian(const ObjectiveFn& f, const std::vector<double>& x,
                                      double rel_step) {
  const size_t n = x.size();
  std::vector<double> hess(n * n, 0.0);
  std::vector<double> p(x);
  const double f0 = f(x);
  std::vector<double> h(n);
  for (size_t j = 0; j < n; ++j) h[j] = rel_step * std::max(1.0, std::abs(x[j]));

  for (size_t j = 0; j < n; ++j) {
    p[j] = x[j] + h[j];
    double fp = f(p);
    p[j] = x[j] - h[j];
    double fm = f(p);
    p[j] = x[j];
    hess[j * n + j] = (fp - 2.0 * f0 + fm) / (h[j] * h[j]);
  }
  for (size_t j = 0; j < n; ++j) {
    for (size_t k = j + 1; k < n; ++k) {
      p[j] = x[j] + h[j];
      p[k] = x[k] + h[k];
      double fpp = f(p);
      p[k] = x[k] - h[k];
      double fpm = f(p);
      p[j] = x[j] - h[j];
      double fmm = f(p);
      p[k] = x[k] + h[k];
      double fmp = f(p);
      p[j] = x[j];
      p[k] = x[k];
      double v = (fpp - fpm - fmp + fmm) / (4.0 * h[j] * h[k]);
      hess[j * n + k] = v;
      hess[k * n + j] = v;
    }
  }
  return hess;
}

}  // namespace lbv
