#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "doctest.h"
#include "lbv/countmodel.hpp"
#include "lbv/design.hpp"
#include "lbv/errors.hpp"
#include "lbv/parallel.hpp"
#include "lbv/randparam.hpp"
#include "lbv/rng.hpp"
#include "lbv/synth.hpp"

namespace {

// const + one uniform covariate on [0,2]; response filled by the caller.
lbv::DesignMatrix make_design(size_t n, uint64_t seed) {
  lbv::DesignMatrix d;
  d.n_rows = n;
  d.n_cols = 2;
  d.columns = {"const", "x1"};
  d.transforms = {lbv::Transform::kIdentity, lbv::Transform::kIdentity};
  lbv::Rng rng = lbv::Rng::substream(seed, "x", 0);
  d.x.resize(n * 2);
  for (size_t i = 0; i < n; ++i) {
    d.x[i * 2] = 1.0;
    d.x[i * 2 + 1] = rng.uniform(0.0, 2.0);
    d.ids.push_back("r" + std::to_string(i));
  }
  d.response.assign(n, 0);
  return d;
}

}  // namespace

TEST_CASE("halton radical inverse matches hand values in bases 2 and 3") {
  auto h2 = lbv::halton_sequence(2, 0, 4);
  REQUIRE(h2.size() == 4);
  // 1 -> 0.1b, 2 -> 0.01b, 3 -> 0.11b, 4 -> 0.001b
  CHECK(h2[0] == 0.5);
  CHECK(h2[1] == 0.25);
  CHECK(h2[2] == 0.75);
  CHECK(h2[3] == 0.125);

  auto h3 = lbv::halton_sequence(3, 0, 3);
  CHECK(h3[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(h3[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(h3[2] == doctest::Approx(1.0 / 9.0).epsilon(1e-15));

  // skip drops the first elements: element 11 in base 2 is 1011b reversed = 13/16
  auto hs = lbv::halton_sequence(2, 10, 1);
  CHECK(hs[0] == 13.0 / 16.0);

  CHECK_THROWS_AS((void)lbv::halton_sequence(1, 0, 4), lbv::ValidationError);
  CHECK_THROWS_AS((void)lbv::halton_sequence(2, -1, 4), lbv::ValidationError);
  CHECK_THROWS_AS((void)lbv::halton_sequence(2, 0, 0), lbv::ValidationError);
}

TEST_CASE("first_primes returns the primes in order") {
  auto p = lbv::first_primes(8);
  std::vector<uint64_t> want = {2, 3, 5, 7, 11, 13, 17, 19};
  CHECK(p == want);
  CHECK(lbv::first_primes(0).empty());
}

TEST_CASE("draw lattice layout, determinism, and per-observation shifts") {
  lbv::DrawSet ds = lbv::build_draws(5, 2, 40, 10, 7);
  CHECK(ds.n_obs == 5);
  CHECK(ds.n_random == 2);
  CHECK(ds.draws == 40);
  REQUIRE(ds.z.size() == 5 * 2 * 40);
  for (double v : ds.z) CHECK(std::isfinite(v));
  // row() is a view into the packed layout
  CHECK(ds.row(3, 1) == &ds.z[(3 * 2 + 1) * 40]);

  // same seed reproduces the lattice bit for bit; another seed moves it
  lbv::DrawSet again = lbv::build_draws(5, 2, 40, 10, 7);
  CHECK(again.z == ds.z);
  lbv::DrawSet other = lbv::build_draws(5, 2, 40, 10, 8);
  CHECK(other.z != ds.z);

  // each (observation, column) pair carries its own shift
  bool rows_differ = false;
  for (size_t r = 0; r < 40; ++r)
    if (ds.row(0, 0)[r] != ds.row(1, 0)[r]) rows_differ = true;
  CHECK(rows_differ);

  // within a row the quantiles of distinct lattice points stay distinct
  std::vector<double> sorted(ds.row(0, 0), ds.row(0, 0) + 40);
  std::sort(sorted.begin(), sorted.end());
  for (size_t r = 1; r < sorted.size(); ++r) CHECK(sorted[r] > sorted[r - 1]);

  CHECK_THROWS_AS((void)lbv::build_draws(5, 1, 24, 10, 7), lbv::ValidationError);
}

TEST_CASE("zero spread reduces the simulated likelihood to the exact poisson one") {
  lbv::DesignMatrix d = make_design(50, 5);
  d.response = lbv::generate_counts(d, {0.2, 0.5}, {0.0, 0.0}, 31);
  std::vector<double> beta = {0.1, 0.4};
  lbv::DrawSet ds = lbv::build_draws(d.n_rows, 1, 60, 10, 7);
  double sll = lbv::simulated_loglik(d, {1}, ds, beta, {0.0});
  double exact = lbv::poisson_loglik(d, beta);
  CHECK(sll == doctest::Approx(exact).epsilon(1e-10));
}

TEST_CASE("simulated likelihood validates its inputs") {
  lbv::DesignMatrix d = make_design(5, 5);
  lbv::DrawSet ds = lbv::build_draws(5, 1, 30, 10, 7);
  std::vector<double> beta = {0.1, 0.4};
  lbv::DrawSet wrong_rows = lbv::build_draws(4, 1, 30, 10, 7);
  CHECK_THROWS_AS((void)lbv::simulated_loglik(d, {1}, wrong_rows, beta, {0.1}),
                  lbv::ValidationError);
  CHECK_THROWS_AS((void)lbv::simulated_loglik(d, {0, 1}, ds, beta, {0.1, 0.1}),
                  lbv::ValidationError);
  CHECK_THROWS_AS((void)lbv::simulated_loglik(d, {1}, ds, beta, {0.1, 0.2}),
                  lbv::ValidationError);
  CHECK_THROWS_AS((void)lbv::simulated_loglik(d, {1}, ds, {0.1}, {0.1}), lbv::ValidationError);
}

TEST_CASE("fit rejects unknown or repeated random columns") {
  lbv::DesignMatrix d = make_design(40, 6);
  d.response = lbv::generate_counts(d, {0.2, 0.5}, {0.0, 0.0}, 32);
  lbv::RandomParamSpec spec;
  spec.random_columns = {"zz"};
  CHECK_THROWS_AS((void)lbv::fit_random_poisson(d, spec), lbv::ValidationError);
  spec.random_columns = {"x1", "x1"};
  CHECK_THROWS_AS((void)lbv::fit_random_poisson(d, spec), lbv::ValidationError);
  spec.random_columns = {"x1"};
  spec.draws = 10;
  CHECK_THROWS_AS((void)lbv::fit_random_poisson(d, spec), lbv::ValidationError);
}

TEST_CASE("simulated maximum recovers the generating mean and spread") {
  // five fixed generator seeds, all required inside +-0.1 of the truth
  for (uint64_t s = 1; s <= 5; ++s) {
    lbv::DesignMatrix d = make_design(1000, 11 + s);
    d.response = lbv::generate_counts(d, {0.2, 0.5}, {0.0, 0.2}, 21 + s);
    lbv::RandomParamSpec spec;
    spec.random_columns = {"x1"};
    spec.draws = 200;
    spec.seed = s;
    lbv::RandomParamFit fit = lbv::fit_random_poisson(d, spec);
    CHECK(fit.converged);
    CHECK(fit.draws_used == 200);
    CHECK(fit.family == "random-poisson");
    CHECK(fit.coef[1].estimate == doctest::Approx(0.5).epsilon(0.2));
    CHECK(std::abs(fit.coef[1].estimate - 0.5) < 0.1);
    REQUIRE(fit.sd_rows.size() == 1);
    CHECK(fit.sd_rows[0].name == "x1");
    CHECK(!fit.sd_rows[0].collapsed);
    CHECK(std::abs(fit.sd_rows[0].estimate - 0.2) < 0.1);
    CHECK(fit.sd_rows[0].t_stat > 1.96);  // a real spread reads as significant
    CHECK(fit.fitted_lambda.size() == d.n_rows);
    CHECK(fit.rho2 > 0.0);
    CHECK(fit.rho2 < 1.0);
  }
}

TEST_CASE("a generator without spread is estimated as insignificant spread") {
  int insignificant = 0;
  for (uint64_t s = 1; s <= 20; ++s) {
    lbv::DesignMatrix d = make_design(200, 100 + s);
    d.response = lbv::generate_counts(d, {0.2, 0.5}, {0.0, 0.0}, 200 + s);
    lbv::RandomParamSpec spec;
    spec.random_columns = {"x1"};
    spec.draws = 50;
    spec.seed = s;
    lbv::RandomParamFit fit = lbv::fit_random_poisson(d, spec);
    CHECK(fit.converged);
    const lbv::SdRow& row = fit.sd_rows[0];
    if (row.collapsed) {
      // boundary collapse reports no spread and no significance
      CHECK(row.std_error == 0.0);
      CHECK(row.t_stat == 0.0);
      ++insignificant;
    } else if (row.t_stat < 1.96) {
      ++insignificant;
    }
  }
  CHECK(insignificant >= 16);  // at least 80 percent of the seeds
}

TEST_CASE("no random columns gives back the fixed poisson fit") {
  lbv::DesignMatrix d = make_design(200, 17);
  d.response = lbv::generate_counts(d, {0.2, 0.5}, {0.0, 0.0}, 41);
  lbv::ModelFit exact = lbv::fit_poisson(d);
  lbv::RandomParamSpec spec;  // random_columns empty on purpose
  lbv::RandomParamFit fit = lbv::fit_random_poisson(d, spec);
  CHECK(fit.converged);
  CHECK(fit.sd_rows.empty());
  REQUIRE(fit.coef.size() == exact.coef.size());
  for (size_t j = 0; j < fit.coef.size(); ++j)
    CHECK(fit.coef[j].estimate == doctest::Approx(exact.coef[j].estimate).epsilon(1e-6));
  CHECK(fit.loglik_conv == doctest::Approx(exact.loglik_conv).epsilon(1e-10));
  CHECK(fit.loglik_zero == doctest::Approx(exact.loglik_zero).epsilon(1e-12));
}

TEST_CASE("more draws tighten the quasi monte carlo estimate") {
  lbv::DesignMatrix d = make_design(200, 3);
  d.response = lbv::generate_counts(d, {0.2, 0.5}, {0.0, 0.3}, 99);
  std::vector<size_t> rc = {1};
  std::vector<double> beta = {0.2, 0.5}, sigma = {0.3};
  lbv::DrawSet ref = lbv::build_draws(d.n_rows, 1, 4000, 10, 7);
  double sll_ref = lbv::simulated_loglik(d, rc, ref, beta, sigma);
  auto err = [&](int64_t draws) {
    lbv::DrawSet ds = lbv::build_draws(d.n_rows, 1, draws, 10, 7);
    return std::abs(lbv::simulated_loglik(d, rc, ds, beta, sigma) - sll_ref);
  };
  // quadrupling the draw count shrinks the gap to a dense reference
  CHECK(err(400) < err(50));
  CHECK(err(800) < err(100));
  CHECK(std::abs(err(50)) > 0.0);
}

TEST_CASE("msl fit is bitwise deterministic across thread counts") {
  lbv::DesignMatrix d = make_design(150, 9);
  d.response = lbv::generate_counts(d, {0.2, 0.5}, {0.0, 0.25}, 77);
  lbv::RandomParamSpec spec;
  spec.random_columns = {"x1"};
  spec.draws = 50;
  spec.seed = 3;
  unsigned before = lbv::thread_count();
  lbv::set_thread_count(1);
  lbv::RandomParamFit a = lbv::fit_random_poisson(d, spec);
  lbv::set_thread_count(5);
  lbv::RandomParamFit b = lbv::fit_random_poisson(d, spec);
  lbv::set_thread_count(before);
  REQUIRE(a.coef.size() == b.coef.size());
  for (size_t j = 0; j < a.coef.size(); ++j) {
    CHECK(a.coef[j].estimate == b.coef[j].estimate);
    CHECK(a.coef[j].std_error == b.coef[j].std_error);
  }
  CHECK(a.sd_rows[0].estimate == b.sd_rows[0].estimate);
  CHECK(a.sd_rows[0].std_error == b.sd_rows[0].std_error);
  CHECK(a.loglik_conv == b.loglik_conv);
  for (size_t i = 0; i < a.fitted_lambda.size(); ++i)
    CHECK(a.fitted_lambda[i] == b.fitted_lambda[i]);
}

TEST_CASE("marginal effects multiply the mean coefficient by the mean rate") {
  lbv::DesignMatrix d = make_design(300, 13);
  d.response = lbv::generate_counts(d, {0.2, 0.5}, {0.0, 0.2}, 55);
  lbv::RandomParamSpec spec;
  spec.random_columns = {"x1"};
  spec.draws = 60;
  lbv::RandomParamFit fit = lbv::fit_random_poisson(d, spec);
  double lbar = 0.0;
  for (double v : fit.fitted_lambda) lbar += v;
  lbar /= static_cast<double>(fit.fitted_lambda.size());
  REQUIRE(fit.marginal_effects.size() == 1);  // the constant carries no effect
  CHECK(fit.marginal_effects[0].first == "x1");
  CHECK(fit.marginal_effects[0].second ==
        doctest::Approx(fit.coef[1].estimate * lbar).epsilon(1e-12));
}
