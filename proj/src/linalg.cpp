#include "lbv/linalg.hpp"

#include <cmath>
#include <string>

#include "lbv/errors.hpp"

namespace lbv {

int cholesky_factor(std::vector<double>& a, size_t n) {
  for (size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return static_cast<int>(j);
    double l = std::sqrt(d);
    a[j * n + j] = l;
    for (size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / l;
    }
  }
  // zero the strict upper triangle so the factor is unambiguous
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
  return -1;
}

namespace {

void fail_pivot(int pivot) {
  throw EstimationError("matrix not positive definite at column " + std::to_string(pivot) +
                            " (collinear or degenerate design)",
                        "");
}

// Solves L y = b then L^T x = y.
std::vector<double> chol_backsolve(const std::vector<double>& l, size_t n,
                                   const std::vector<double>& b) {
  std::vector<double> x(b);
  for (size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (size_t k = 0; k < i; ++k) s -= l[i * n + k] * x[k];
    x[i] = s / l[i * n + i];
  }
  for (size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * x[k];
    x[ii] = s / l[ii * n + ii];
  }
  return x;
}

}  // namespace

std::vector<double> cholesky_solve(std::vector<double> a, size_t n, const std::vector<double>& b) {
  int pivot = cholesky_factor(a, n);
  if (pivot >= 0) fail_pivot(pivot);
  return chol_backsolve(a, n, b);
}

std::vector<double> cholesky_solve_factored(const std::vector<double>& l, size_t n,
                                            const std::vector<double>& b) {
  return chol_backsolve(l, n, b);
}

std::vector<double> cholesky_inverse(std::vector<double> a, size_t n) {
  int pivot = cholesky_factor(a, n);
  if (pivot >= 0) fail_pivot(pivot);
  std::vector<double> inv(n * n, 0.0);
  std::vector<double> e(n, 0.0);
  for (size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    std::vector<double> col = chol_backsolve(a, n, e);
    for (size_t i = 0; i < n; ++i) inv[i * n + j] = col[i];
    e[j] = 0.0;
  }
  return inv;
}

std::vector<double> matvec(const std::vector<double>& a, size_t rows, size_t cols,
                           const std::vector<double>& x) {
  std::vector<double> y(rows, 0.0);
  for (size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (size_t j = 0; j < cols; ++j) s += a[i * cols + j] * x[j];
    y[i] = s;
  }
  return y;
}

}  // namespace lbv
