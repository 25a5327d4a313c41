#include <stdexcept>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "escare/stats.hpp"

using namespace escare;

TEST_SUITE_BEGIN("stats");

TEST_CASE("normal inverse cdf round trip") {
  for (double p : {1e-9, 1e-6, 0.001, 0.01, 0.1, 0.5, 0.9, 0.99, 0.999999}) {
    CHECK(std::fabs(stats::norm_cdf(stats::norm_ppf(p)) - p) < 1e-9);
  }
  CHECK(stats::norm_ppf(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(stats::norm_ppf(0.01) == doctest::Approx(-2.3263479).epsilon(1e-6));
  CHECK_THROWS_AS(stats::norm_ppf(0.0), std::invalid_argument);
  CHECK_THROWS_AS(stats::norm_ppf(1.0), std::invalid_argument);
}

TEST_CASE("chi-square tail probabilities") {
  // textbook 5% critical values
  CHECK(stats::chi2_sf(3.841459, 1) == doctest::Approx(0.05).epsilon(1e-5));
  CHECK(stats::chi2_sf(5.991465, 2) == doctest::Approx(0.05).epsilon(1e-5));
  CHECK(stats::chi2_sf(7.814728, 3) == doctest::Approx(0.05).epsilon(1e-5));
  CHECK(stats::chi2_sf(12.591587, 6) == doctest::Approx(0.05).epsilon(1e-5));
  CHECK(stats::chi2_sf(0.0, 1) == doctest::Approx(1.0));
  // chi2(2) has the closed form exp(-x/2)
  for (double x : {0.5, 1.0, 4.0, 10.0})
    CHECK(stats::chi2_sf(x, 2) == doctest::Approx(std::exp(-0.5 * x)).epsilon(1e-12));
}

namespace {

// independent route to the Gaussian expectile level: bisection on the
// first-order condition with the partial moments evaluated by quadrature
double tau_by_bisection(double alpha) {
  const double q = stats::norm_ppf(alpha);
  auto partial_below = [&](double m) {
    // E[(m - Y) 1(Y < m)] by trapezoid quadrature over (-12, m)
    const int n = 40000;
    const double lo = -12.0;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double y = lo + (m - lo) * i / n;
      const double f = (m - y) * stats::norm_pdf(y);
      s += (i == 0 || i == n) ? 0.5 * f : f;
    }
    return s * (m - lo) / n;
  };
  const double below = partial_below(q);
  const double above = below - q;  // E(Y-m)+ = E(m-Y)+ - m for zero-mean Y
  auto foc = [&](double tau) { return tau * above - (1.0 - tau) * below; };
  double lo = 1e-8, hi = alpha;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (foc(mid) > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("gaussian expectile level matches the quadrature oracle") {
  const double tau = stats::gaussian_expectile_tau(0.01);
  CHECK(tau == doctest::Approx(tau_by_bisection(0.01)).epsilon(1e-4));
  // close to (but not exactly) the commonly quoted 0.001461
  CHECK(std::fabs(tau - 0.001461) < 2e-5);
  CHECK(stats::gaussian_expectile_tau(0.05) ==
        doctest::Approx(tau_by_bisection(0.05)).epsilon(1e-4));
}

TEST_CASE("gaussian ES multiplier") {
  CHECK(stats::gaussian_es_multiplier(0.01) == doctest::Approx(2.665214).epsilon(1e-6));
  CHECK(stats::gaussian_es_multiplier(0.025) == doctest::Approx(2.337803).epsilon(1e-5));
}

TEST_CASE("cholesky factor and solve") {
  // A = L L^T for a fixed lower-triangular L
  const int n = 3;
  std::vector<double> l = {2.0, 0.0, 0.0, 0.5, 1.5, 0.0, -0.3, 0.7, 1.1};
  std::vector<double> a(n * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) a[i * n + j] += l[i * n + k] * l[j * n + k];
  std::vector<double> f = a;
  REQUIRE(stats::cholesky(f, n));
  for (int i = 0; i < n * n; ++i) CHECK(f[i] == doctest::Approx(l[i]).epsilon(1e-12));

  const std::vector<double> x = {1.0, -2.0, 0.5};
  std::vector<double> b(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b[i] += a[i * n + j] * x[j];
  const auto sol = stats::chol_solve(f, n, b);
  for (int i = 0; i < n; ++i) CHECK(sol[i] == doctest::Approx(x[i]).epsilon(1e-10));

  std::vector<double> not_pd = {1.0, 2.0, 2.0, 1.0};
  CHECK_FALSE(stats::cholesky(not_pd, 2));
}

TEST_CASE("rng normal moments and stream independence") {
  stats::Rng rng(42);
  const int n = 200000;
  double m = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    m += x;
    s2 += x * x;
  }
  m /= n;
  s2 = s2 / n - m * m;
  CHECK(std::fabs(m) < 0.01);
  CHECK(s2 == doctest::Approx(1.0).epsilon(0.02));

  stats::Rng a(stats::Rng::stream_seed(7, 0)), b(stats::Rng::stream_seed(7, 1));
  int same = 0;
  for (int i = 0; i < 1000; ++i)
    if (a.next_u64() == b.next_u64()) ++same;
  CHECK(same == 0);

  stats::Rng c(123), d(123);
  for (int i = 0; i < 100; ++i) CHECK(c.next_u64() == d.next_u64());
}

TEST_CASE("empirical quantile interpolation") {
  const std::vector<double> x = {4.0, 1.0, 3.0, 2.0};
  CHECK(stats::quantile(x, 0.0) == doctest::Approx(1.0));
  CHECK(stats::quantile(x, 1.0) == doctest::Approx(4.0));
  CHECK(stats::quantile(x, 0.5) == doctest::Approx(2.5));
  CHECK_THROWS_AS(stats::quantile({}, 0.5), std::invalid_argument);
}

TEST_SUITE_END();
