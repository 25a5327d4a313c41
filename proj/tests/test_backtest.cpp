#include <stdexcept>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "escare/backtest.hpp"
#include "escare/errors.hpp"
#include "escare/stats.hpp"

using namespace escare;

namespace {

HitSeries hits_of(std::vector<std::uint8_t> h, double alpha = 0.01) {
  HitSeries out;
  out.hits = std::move(h);
  out.alpha = alpha;
  return out;
}

HitSeries bernoulli_hits(std::size_t m, double p, std::uint64_t seed, double alpha = 0.01) {
  stats::Rng rng(seed);
  std::vector<std::uint8_t> h(m);
  for (auto& v : h) v = rng.uniform() < p ? 1 : 0;
  return hits_of(std::move(h), alpha);
}

}  // namespace

TEST_SUITE_BEGIN("backtest");

TEST_CASE("violation rate") {
  CHECK(vrate(bernoulli_hits(0 + 2113, -1.0, 1)) == doctest::Approx(0.0));
  HitSeries h = hits_of(std::vector<std::uint8_t>(2113, 0));
  for (int i = 0; i < 21; ++i) h.hits[i * 97] = 1;
  CHECK(vrate(h) * 100.0 == doctest::Approx(0.994).epsilon(2e-4));
  HitSeries all = hits_of(std::vector<std::uint8_t>(50, 1));
  CHECK(vrate(all) == doctest::Approx(1.0));
}

TEST_CASE("kupiec unconditional coverage") {
  SUBCASE("exact coverage gives a zero statistic") {
    HitSeries h = hits_of(std::vector<std::uint8_t>(1000, 0));
    for (int i = 0; i < 10; ++i) h.hits[i * 100] = 1;
    const auto r = kupiec_uc(h);
    CHECK(r.statistic == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.p_value == doctest::Approx(1.0));
    CHECK_FALSE(r.reject_at_5pct);
  }
  SUBCASE("5 violations in 250 days") {
    HitSeries h = hits_of(std::vector<std::uint8_t>(250, 0));
    for (int i = 0; i < 5; ++i) h.hits[i * 49] = 1;
    const auto r = kupiec_uc(h);
    CHECK(r.statistic == doctest::Approx(1.957).epsilon(3e-4));
    CHECK(r.p_value == doctest::Approx(0.162).epsilon(2e-3));
    CHECK(r.dof == 1);
  }
  SUBCASE("zero violations uses the limit convention") {
    const auto r = kupiec_uc(hits_of(std::vector<std::uint8_t>(250, 0)));
    CHECK(r.statistic == doctest::Approx(-2.0 * 250.0 * std::log(0.99)).epsilon(1e-12));
    CHECK(r.statistic == doctest::Approx(5.025).epsilon(1e-4));
  }
}

TEST_CASE("christoffersen conditional coverage") {
  SUBCASE("alternating hits are strongly dependent") {
    std::vector<std::uint8_t> h(400);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = i % 2;
    const auto r = christoffersen_cc(hits_of(std::move(h), 0.5));
    CHECK(r.reject_at_5pct);
    CHECK(r.statistic > 100.0);
    CHECK(r.dof == 2);
  }
  SUBCASE("no hits at all degrades gracefully") {
    const auto r = christoffersen_cc(hits_of(std::vector<std::uint8_t>(300, 0)));
    CHECK(r.note.find("degenerate") != std::string::npos);
    CHECK(r.statistic == doctest::Approx(kupiec_uc(hits_of(std::vector<std::uint8_t>(300, 0))).statistic));
  }
  SUBCASE("independent hits are accepted most of the time") {
    int rejects = 0;
    for (int k = 0; k < 60; ++k)
      if (christoffersen_cc(bernoulli_hits(2000, 0.01, 500 + k)).reject_at_5pct) ++rejects;
    CHECK(rejects <= 10);
  }
}

TEST_CASE("dynamic quantile test") {
  stats::Rng rng(60);

  SUBCASE("persistent hit clusters are rejected") {
    std::vector<std::uint8_t> h(600, 0);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = (i % 100) < 50 ? 1 : 0;
    std::vector<double> var(600);
    for (auto& v : var) v = -2.0 + 0.1 * rng.normal();
    const auto r = dq_test(hits_of(std::move(h), 0.25), var, 1);
    CHECK(r.reject_at_5pct);
    CHECK(r.dof == 3);
  }

  SUBCASE("constant var column is a singular design") {
    auto h = bernoulli_hits(500, 0.01, 61);
    const std::vector<double> var(500, -2.33);
    CHECK_THROWS_AS(dq_test(h, var, 1), NumericalError);
  }

  SUBCASE("well specified forecasts are accepted most of the time") {
    int rejects = 0;
    for (int k = 0; k < 40; ++k) {
      stats::Rng g(700 + k);
      const std::size_t m = 2000;
      std::vector<double> var(m);
      std::vector<std::uint8_t> h(m);
      for (std::size_t t = 0; t < m; ++t) {
        const double sigma = std::exp(0.2 * g.normal());
        var[t] = sigma * stats::norm_ppf(0.01);
        h[t] = (sigma * g.normal() < var[t]) ? 1 : 0;
      }
      if (dq_test(hits_of(std::move(h)), var, 1).reject_at_5pct) ++rejects;
    }
    CHECK(rejects <= 8);
  }

  SUBCASE("lag order guards") {
    auto h = bernoulli_hits(10, 0.3, 62);
    const std::vector<double> var(10, -1.0);
    CHECK_THROWS_AS(dq_test(h, var, 8), std::invalid_argument);
  }
}

TEST_CASE("vqr test") {
  SUBCASE("well specified var line: sane fields and mostly accepted") {
    // the Wald test at 1% coverage over-rejects in small samples; at m = 2000
    // the measured size is ~10%, so check the rate rather than one draw
    int rejects = 0;
    const int trials = 24;
    for (int k = 0; k < trials; ++k) {
      stats::Rng g(630 + k);
      const std::size_t m = 2000;
      std::vector<double> r(m), var(m);
      for (std::size_t t = 0; t < m; ++t) {
        const double sigma = std::exp(0.25 * g.normal());
        var[t] = sigma * stats::norm_ppf(0.01);
        r[t] = sigma * g.normal();
      }
      const auto res = vqr_test(r, var, 0.01);
      CHECK(res.dof == 2);
      CHECK(res.statistic >= 0.0);
      CHECK(res.p_value >= 0.0);
      CHECK(res.p_value <= 1.0);
      if (res.reject_at_5pct) ++rejects;
    }
    CHECK(rejects <= 7);
  }

  SUBCASE("uniformly shifted forecasts are rejected with enough data") {
    stats::Rng g(64);
    const std::size_t m = 4000;
    std::vector<double> r(m), var(m);
    for (std::size_t t = 0; t < m; ++t) {
      const double sigma = std::exp(0.25 * g.normal());
      var[t] = sigma * stats::norm_ppf(0.01) - 1.0;
      r[t] = sigma * g.normal();
    }
    CHECK(vqr_test(r, var, 0.01).reject_at_5pct);
  }

  SUBCASE("minimum sample guard") {
    const std::vector<double> r(30, 0.0), var(30, -1.0);
    CHECK_THROWS_AS(vqr_test(r, var, 0.01), std::invalid_argument);
  }

  SUBCASE("constant forecasts leave the slope unidentified") {
    stats::Rng g(65);
    std::vector<double> r(400), var(400, -2.33);
    for (auto& v : r) v = g.normal();
    CHECK_THROWS_AS(vqr_test(r, var, 0.01), NumericalError);
  }
}

TEST_CASE("es rate") {
  const std::vector<double> r = {0.5, -0.2, -3.0, 0.1};
  const std::vector<double> es = {-2.5, -2.5, -2.5, -2.5};
  CHECK(es_rate(r, es) == doctest::Approx(0.25));
  const std::vector<double> above = {-1.0, -1.0};
  CHECK(es_rate(std::vector<double>{0.0, 0.5}, above) == doctest::Approx(0.0));
  const std::vector<double> bad = {1.0, -1.0};
  CHECK_THROWS_AS(es_rate(r, std::vector<double>{-1.0, -1.0, 1.0, -1.0}), std::invalid_argument);
  (void)bad;
}

TEST_CASE("es rate never exceeds the violation rate when es is deeper than var") {
  stats::Rng g(660);
  for (int k = 0; k < 20; ++k) {
    const std::size_t m = 500;
    std::vector<double> r(m), var(m), es(m);
    for (std::size_t t = 0; t < m; ++t) {
      const double sigma = std::exp(0.3 * g.normal());
      r[t] = sigma * g.normal();
      var[t] = sigma * stats::norm_ppf(0.01 + 0.04 * g.uniform());
      es[t] = 1.2 * var[t];
    }
    const auto hits = HitSeries::from_forecasts(r, var, 0.01);
    const double v = vrate(hits);
    const double e = es_rate(r, es);
    CHECK(e <= v);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(e >= 0.0);
  }
}

TEST_CASE("model confidence set") {
  stats::Rng rng(65);

  SUBCASE("identical loss columns both survive with p = 1") {
    std::vector<double> col(300);
    for (auto& v : col) v = rng.normal();
    const std::vector<std::vector<double>> losses = {col, col};
    McsConfig cfg;
    cfg.bootstrap_b = 500;
    cfg.seed = 66;
    const auto res = mcs(losses, cfg);
    CHECK(res.included[0]);
    CHECK(res.included[1]);
    CHECK(res.p_values[0] == doctest::Approx(1.0));
    CHECK(res.p_values[1] == doctest::Approx(1.0));
  }

  SUBCASE("a dominated model is eliminated") {
    std::vector<double> base(400);
    for (auto& v : base) v = rng.normal();
    std::vector<double> worse = base;
    for (auto& v : worse) v += 10.0;
    McsConfig cfg;
    cfg.bootstrap_b = 1000;
    cfg.seed = 67;
    const auto res = mcs({base, worse}, cfg);
    CHECK(res.included[0]);
    CHECK_FALSE(res.included[1]);
    REQUIRE(res.eliminated.size() == 1);
    CHECK(res.eliminated[0] == 1);
  }

  SUBCASE("membership is invariant to the model ordering") {
    const std::size_t m = 500;
    std::vector<std::vector<double>> losses(3, std::vector<double>(m));
    for (std::size_t t = 0; t < m; ++t) {
      const double common = rng.normal();
      losses[0][t] = common + 0.0 + 0.5 * rng.normal();
      losses[1][t] = common + 0.08 + 0.5 * rng.normal();
      losses[2][t] = common + 0.8 + 0.5 * rng.normal();
    }
    McsConfig cfg;
    cfg.bootstrap_b = 800;
    cfg.seed = 68;
    const auto a = mcs(losses, cfg);
    const auto b = mcs({losses[2], losses[0], losses[1]}, cfg);
    CHECK(a.included[0] == b.included[1]);
    CHECK(a.included[1] == b.included[2]);
    CHECK(a.included[2] == b.included[0]);
  }

  SUBCASE("input guards") {
    McsConfig cfg;
    cfg.bootstrap_b = 50;
    CHECK_THROWS_AS(mcs({{1.0, 2.0}, {1.0, 2.0}}, cfg), std::invalid_argument);  // B too small
    cfg.bootstrap_b = 500;
    CHECK_THROWS_AS(mcs({{1.0, 2.0}}, cfg), std::invalid_argument);              // one model
    CHECK_THROWS_AS(mcs({{1.0, 2.0}, {1.0}}, cfg), std::invalid_argument);       // ragged
  }
}

TEST_SUITE_END();
