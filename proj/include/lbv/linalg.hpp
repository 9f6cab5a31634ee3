#pragma once

// Minimal dense helpers for the estimation code. Matrices are row-major
// std::vector<double> with explicit dimensions; problem sizes here are a
// handful of regression columns, so clarity beats blocking.

#include <cstddef>
#include <vector>

namespace lbv {

// In-place lower Cholesky of an n x n SPD matrix. Returns the index of
// the first non-positive pivot, or -1 on success.
int cholesky_factor(std::vector<double>& a, size_t n);

// Solves A x = b for SPD A via its Cholesky factor (computed inside).
// Throws EstimationError naming the pivot column on rank deficiency.
std::vector<double> cholesky_solve(std::vector<double> a, size_t n, const std::vector<double>& b);

// Solve with an already computed lower factor.
std::vector<double> cholesky_solve_factored(const std::vector<double>& l, size_t n,
                                            const std::vector<double>& b);

// Inverse of an SPD matrix (for covariance diagonals). Same error
// contract as cholesky_solve.
std::vector<double> cholesky_inverse(std::vector<double> a, size_t n);

std::vector<double> matvec(const std::vector<double>& a, size_t rows, size_t cols,
                           const std::vector<double>& x);

}  // namespace lbv
