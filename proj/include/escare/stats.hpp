#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace escare::stats {

inline constexpr double kPi = 3.14159265358979323846;

/// Standard normal density.
double norm_pdf(double x);

/// Standard normal cdf, accurate in both tails (erfc based).
double norm_cdf(double x);

/// Standard normal inverse cdf (Wichura AS241, |error| < 1e-9 over (0,1)).
double norm_ppf(double p);

/// Upper tail probability of a chi-square with `dof` degrees of freedom.
double chi2_sf(double x, int dof);

/// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

/// Expectile level tau such that the tau-expectile of a standard normal equals
/// its alpha-quantile. Closed form: tau = A / (2A - z), z = ppf(alpha),
/// A = pdf(z) + z*alpha.
double gaussian_expectile_tau(double alpha);

/// phi(ppf(alpha)) / alpha, the Gaussian ES multiplier (positive).
double gaussian_es_multiplier(double alpha);

double mean(std::span<const double> x);
double variance(std::span<const double> x);  // denominator n-1, 0 if n < 2
double stddev(std::span<const double> x);

/// Empirical quantile with linear interpolation between order statistics
/// (index p*(n-1), "type 7").
double quantile(std::vector<double> x, double p);

// --- small dense symmetric linear algebra (row-major n x n) ---

/// In-place lower Cholesky of a row-major SPD matrix. Returns false when a
/// pivot is not strictly positive.
bool cholesky(std::vector<double>& a, int n);

/// Solve L L^T x = b given the lower factor from cholesky().
std::vector<double> chol_solve(const std::vector<double>& l, int n, std::vector<double> b);

/// Sample covariance (rows = observations), denominator n-1.
std::vector<double> sample_cov(const std::vector<std::vector<double>>& rows);

// --- RNG ---

/// Deterministic stream-seedable generator. Normal draws use the polar method
/// so results do not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Derives an independent stream for worker `k` (splitmix64 scrambling).
  static std::uint64_t stream_seed(std::uint64_t base, std::uint64_t k);

  double uniform();                 // (0, 1)
  double normal();                  // N(0, 1)
  std::uint64_t next_u64();
  int uniform_int(int n);           // {0, ..., n-1}

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace escare::stats
