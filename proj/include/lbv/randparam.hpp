#pragma once

// Random-parameter Poisson regression by maximum simulated likelihood.
// Random coefficients are normal around their means; the mixing
// integral is approximated with shifted Halton draws, one prime base
// per random column and a per-observation offset so no two
// observations share a draw vector.

#include <cstdint>
#include <string>
#include <vector>

#include "lbv/countmodel.hpp"
#include "lbv/design.hpp"

namespace lbv {

// Radical-inverse sequence in the given base, elements skip+1..skip+n.
std::vector<double> halton_sequence(uint64_t base, int64_t skip, int64_t n);

std::vector<uint64_t> first_primes(size_t k);

struct RandomParamSpec {
  std::vector<std::string> random_columns;  // design columns with random slopes
  int64_t draws = 200;
  int64_t halton_skip = 10;
  uint64_t seed = 1;
};

// Standard-normal draw lattice, fixed for a whole fit. Layout groups
// the draws for one (observation, random column) pair contiguously.
struct DrawSet {
  size_t n_obs = 0;
  size_t n_random = 0;
  size_t draws = 0;
  std::vector<double> z;  // [(i*n_random + k)*draws + r]

  const double* row(size_t i, size_t k) const { return &z[(i * n_random + k) * draws]; }
};

DrawSet build_draws(size_t n_obs, size_t n_random, int64_t draws, int64_t halton_skip,
                    uint64_t seed);

// Simulated log-likelihood sum_i ln[(1/R) sum_r P(n_i | beta + sigma.z_ir)],
// exposed for the sigma=0 identity and draw-refinement checks.
double simulated_loglik(const DesignMatrix& d, const std::vector<size_t>& random_cols,
                        const DrawSet& draws, const std::vector<double>& beta,
                        const std::vector<double>& sigma);

struct SdRow {
  std::string name;       // design column the random coefficient rides on
  double estimate = 0.0;  // sigma-hat
  double std_error = 0.0;
  double t_stat = 0.0;
  bool collapsed = false;  // driven to the fixed-coefficient boundary
};

struct RandomParamFit : ModelFit {
  std::vector<SdRow> sd_rows;
  int64_t draws_used = 0;
  std::vector<std::pair<std::string, double>> marginal_effects;
};

// Same convergence contract as the fixed fits, but the gradient of a
// simulated likelihood is finite-difference, so the tolerance is 1e-5.
FitOptions msl_default_options();

RandomParamFit fit_random_poisson(const DesignMatrix& d, const RandomParamSpec& spec,
                                  const FitOptions& options = msl_default_options());

// AME_k = mean-coefficient beta_k times the average simulated lambda;
// log-transformed columns read per ln-unit.
std::vector<std::pair<std::string, double>> average_marginal_effects(const RandomParamFit& fit,
                                                                     const DesignMatrix& d);

}  // namespace lbv
