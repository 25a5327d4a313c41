#include <stdexcept>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "escare/errors.hpp"
#include "escare/mcmc.hpp"
#include "escare/simulator.hpp"
#include "escare/stats.hpp"

using namespace escare;

TEST_SUITE_BEGIN("mcmc");

TEST_CASE("target acceptance rates by block dimension") {
  CHECK(target_acceptance(1) == doctest::Approx(0.44));
  CHECK(target_acceptance(2) == doctest::Approx(0.35));
  CHECK(target_acceptance(3) == doctest::Approx(0.35));
  CHECK(target_acceptance(4) == doctest::Approx(0.35));
  CHECK(target_acceptance(5) == doctest::Approx(0.234));
  CHECK(target_acceptance(7) == doctest::Approx(0.234));
  CHECK_THROWS_AS(target_acceptance(0), std::invalid_argument);
}

TEST_CASE("random-walk proposal") {
  const std::array<double, 3> scales = {1.0, 100.0, 0.01};
  stats::Rng rng(41);

  SUBCASE("mixture components drawn uniformly") {
    std::array<int, 3> counts = {0, 0, 0};
    const std::vector<double> chol = {1.0};
    const std::vector<double> x = {0.0};
    const int n = 30000;
    for (int i = 0; i < n; ++i) ++counts[propose_rw(x, chol, 1, scales, rng).component];
    for (int c = 0; c < 3; ++c)
      CHECK(std::fabs(counts[c] / static_cast<double>(n) - 1.0 / 3.0) < 0.02);
  }

  SUBCASE("degenerate covariance keeps the candidate at the current point") {
    const std::vector<double> chol = {1e-12, 0.0, 0.0, 1e-12};
    const std::vector<double> x = {2.0, -3.0};
    for (int i = 0; i < 50; ++i) {
      const auto d = propose_rw(x, chol, 2, scales, rng);
      CHECK(std::fabs(d.candidate[0] - 2.0) < 1e-9);
      CHECK(std::fabs(d.candidate[1] + 3.0) < 1e-9);
    }
  }

  SUBCASE("random-walk symmetry of the step distribution") {
    // steps and their negations are equally likely: compare empirical cdfs
    const std::vector<double> chol = {1.3};
    const std::vector<double> x = {0.5};
    int pos = 0;
    const int n = 40000;
    double mean_step = 0.0;
    for (int i = 0; i < n; ++i) {
      const double step = propose_rw(x, chol, 1, scales, rng).candidate[0] - 0.5;
      mean_step += step;
      if (step > 0.0) ++pos;
    }
    CHECK(std::fabs(pos / static_cast<double>(n) - 0.5) < 0.01);
  }
}

TEST_CASE("metropolis accept step") {
  stats::Rng rng(43);
  CHECK(mh_step(-10.0, -10.0, rng));  // equal posterior always accepts
  CHECK(mh_step(-10.0, -5.0, rng));   // uphill always accepts
  CHECK_FALSE(mh_step(-10.0, -std::numeric_limits<double>::infinity(), rng));
  int acc = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i)
    if (mh_step(0.0, std::log(0.3), rng)) ++acc;
  CHECK(std::fabs(acc / static_cast<double>(n) - 0.3) < 0.01);
}

TEST_CASE("two-point posterior visited in the correct ratio") {
  // piecewise-flat density: mass p on [0,1), q on [1,2), zero elsewhere
  const double p = 0.7, q = 0.3;
  auto lp = [&](std::span<const double> x) {
    if (x[0] >= 0.0 && x[0] < 1.0) return std::log(p);
    if (x[0] >= 1.0 && x[0] < 2.0) return std::log(q);
    return -std::numeric_limits<double>::infinity();
  };
  stats::Rng rng(44);
  std::vector<double> x = {0.5};
  double cur = lp(x);
  const std::vector<double> chol = {0.8};
  long in_low = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto d = propose_rw(x, chol, 1, {1.0, 100.0, 0.01}, rng);
    const double cand = lp(d.candidate);
    if (mh_step(cur, cand, rng)) {
      x = d.candidate;
      cur = cand;
    }
    if (x[0] < 1.0) ++in_low;
  }
  CHECK(std::fabs(in_low / static_cast<double>(n) - p) < 0.02);
}

TEST_CASE("burn-in on an immediately stationary target converges at the second epoch") {
  McmcProblem prob;
  prob.log_posterior = [](std::span<const double> x) { return -0.5 * x[0] * x[0]; };
  prob.blocks = {{0}};
  prob.init = {0.0};
  prob.scale_hint = {1.0};
  McmcConfig cfg;
  cfg.epoch_length = 4000;
  cfg.epoch_discard = 400;
  cfg.final_epoch = 2000;
  cfg.final_discard = 200;
  cfg.seed = 45;
  stats::Rng rng(cfg.seed);
  const auto st = run_burnin(prob, cfg, rng);
  CHECK(st.converged);
  CHECK(st.epochs_used <= 3);
  CHECK(st.warnings.empty());
}

TEST_CASE("gaussian pseudo-target: end-to-end sampler moments") {
  // correlated 2d normal, mean (1, -2), sd (1, 0.5), corr 0.6
  const double m0 = 1.0, m1 = -2.0, s0 = 1.0, s1 = 0.5, rho = 0.6;
  const double det = s0 * s0 * s1 * s1 * (1.0 - rho * rho);
  auto lp = [&](std::span<const double> x) {
    const double a = x[0] - m0, b = x[1] - m1;
    const double q = (a * a / (s0 * s0) - 2.0 * rho * a * b / (s0 * s1) + b * b / (s1 * s1)) /
                     (1.0 - rho * rho);
    return -0.5 * q - 0.5 * std::log(det);
  };
  McmcProblem prob;
  prob.log_posterior = lp;
  prob.blocks = {{0, 1}};
  prob.init = {0.0, 0.0};
  prob.scale_hint = {0.5, 0.5};
  McmcConfig cfg;
  cfg.epoch_length = 6000;
  cfg.epoch_discard = 600;
  cfg.final_epoch = 6000;
  cfg.final_discard = 1000;
  cfg.epoch_cap = 12;
  cfg.seed = 46;
  const auto res = run_mcmc(prob, cfg);

  const std::size_t n = res.final_sample.iterates.size();
  REQUIRE(n > 1000);
  // crude effective-sample allowance: 3 MC standard errors with act ~ 10
  const double se0 = 3.0 * s0 * std::sqrt(10.0 / static_cast<double>(n));
  const double se1 = 3.0 * s1 * std::sqrt(10.0 / static_cast<double>(n));
  CHECK(std::fabs(res.posterior_mean[0] - m0) < se0);
  CHECK(std::fabs(res.posterior_mean[1] - m1) < se1);

  double c00 = 0, c01 = 0, c11 = 0;
  for (const auto& row : res.final_sample.iterates) {
    c00 += (row[0] - res.posterior_mean[0]) * (row[0] - res.posterior_mean[0]);
    c01 += (row[0] - res.posterior_mean[0]) * (row[1] - res.posterior_mean[1]);
    c11 += (row[1] - res.posterior_mean[1]) * (row[1] - res.posterior_mean[1]);
  }
  c00 /= n;
  c01 /= n;
  c11 /= n;
  CHECK(c00 == doctest::Approx(s0 * s0).epsilon(0.2));
  CHECK(c11 == doctest::Approx(s1 * s1).epsilon(0.2));
  CHECK(c01 == doctest::Approx(rho * s0 * s1).epsilon(0.3));
}

TEST_CASE("chain never leaves the support") {
  // box-constrained target: flat on [0,1] x [0,1]
  auto lp = [](std::span<const double> x) {
    for (double v : x)
      if (v < 0.0 || v > 1.0) return -std::numeric_limits<double>::infinity();
    return 0.0;
  };
  McmcProblem prob;
  prob.log_posterior = lp;
  prob.blocks = {{0}, {1}};
  prob.init = {0.5, 0.5};
  prob.scale_hint = {0.2, 0.2};
  McmcConfig cfg;
  cfg.epoch_length = 3000;
  cfg.epoch_discard = 300;
  cfg.final_epoch = 3000;
  cfg.final_discard = 300;
  cfg.seed = 47;
  const auto res = run_mcmc(prob, cfg);
  for (const auto& row : res.final_sample.iterates)
    for (double v : row) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  // flat-box moments as a bonus sanity check
  CHECK(res.posterior_mean[0] == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("block layouts partition each family's parameters") {
  for (auto f : {Family::EsCare, Family::EsCaviarAdd, Family::EsCaviarMult, Family::ReEsCare,
                 Family::ReTEsCare}) {
    const auto blocks = mcmc_blocks(f);
    std::vector<int> seen(param_count(f), 0);
    for (const auto& b : blocks)
      for (int i : b) ++seen[i];
    for (int c : seen) CHECK(c == 1);
  }
  CHECK(mcmc_blocks(Family::ReEsCare).size() == 3);
  CHECK(mcmc_blocks(Family::ReTEsCare)[0].size() == 7);
  CHECK(mcmc_blocks(Family::ReTEsCare)[1].size() == 1);
  CHECK_THROWS_AS(mcmc_blocks(Family::CareSav), std::invalid_argument);
}

TEST_CASE("model fit stays inside the constraint region") {
  DgpSpec d{1, 700, 95};
  const auto s = simulate(d);
  auto spec = make_spec(Family::ReEsCare, 0.01, "x");
  McmcConfig cfg;
  cfg.epoch_length = 1500;
  cfg.epoch_discard = 150;
  cfg.final_epoch = 1500;
  cfg.final_discard = 300;
  cfg.epoch_cap = 5;
  cfg.seed = 48;
  cfg.store_chain = true;
  const auto fit = fit_mcmc(spec, s.returns, s.x, cfg);
  REQUIRE(!fit.chain.empty());
  ParamVector p = fit.params;
  for (const auto& row : fit.chain) {
    p.v = row;
    CHECK(spec.region.contains(p, spec.alpha));
  }
  CHECK(std::isfinite(fit.loglik));
}

TEST_SUITE_END();
