#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "escare/models.hpp"

namespace escare {

struct MlConfig {
  int n_random_starts = 10000;
  double tolerance = 1e-8;
  int max_iterations = 40000;
  std::uint64_t seed = 1;
  int expectile_starts = 24;   // multi-start count for the step-1 ALS fit
  double step1_tau = -1.0;     // < 0 means the Gaussian-implied tau(alpha)
};

struct NmResult {
  std::vector<double> x;
  double fval = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Derivative-free simplex minimizer; the objective may return +inf (e.g.
/// outside a constraint box). Stops when the simplex f-spread falls below
/// `ftol` or after `max_iter` evaluations.
NmResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                     std::vector<double> x0, std::vector<double> step, double ftol,
                     int max_iter);

enum class ExpectileFamily { Constant, Linear, Threshold };

struct ExpectileFit {
  std::vector<double> beta;  // 1, 3 or 6 coefficients
  double objective = 0.0;
};

/// Minimizes the ALS criterion under the CARE recursion at fixed tau by
/// multi-start local search. `driver` is |r_{t-1}| for daily families or the
/// realized measure for Re- families; regimes switch on the sign of r_{t-1}.
ExpectileFit fit_expectile_regression(std::span<const double> returns,
                                      std::span<const double> driver, double tau,
                                      ExpectileFamily family, double alpha,
                                      std::uint64_t seed, int n_starts = 24);

struct FitReport {
  ParamVector params;
  double loglik = 0.0;
  bool converged = true;
  int iterations = 0;
  int feasible_starts = 0;
  std::vector<std::string> warnings;
};

/// Three-step ML: (1) expectile-equation coefficients by ALS regression,
/// (2) random candidate vectors for the remaining parameters over the region
/// boxes, (3) constrained local optimization of the full likelihood from the
/// best candidate. Deterministic given config.seed.
FitReport fit_ml(const ModelSpec& spec, std::span<const double> returns,
                 std::span<const double> measures, const MlConfig& config);

struct GridSearchFit {
  double tau = 0.0;
  ParamVector params;      // CareSav betas with external_tau = tau
  double vrate = 0.0;      // in-sample violation rate at the selected tau
};

/// Default grid: 50 log-spaced points in [1e-4, alpha-1e-4].
std::vector<double> default_tau_grid(double alpha, int points = 50);

/// Fits CARE-SAV by ALS for every grid tau and returns the tau whose in-sample
/// VRate is closest to alpha (ties resolved toward the smaller tau).
GridSearchFit care_grid_search(std::span<const double> returns, double alpha,
                               std::span<const double> grid, std::uint64_t seed = 1,
                               int n_starts = 12);

/// Closed-form profile estimate of the ES scaling factor given an expectile
/// path: mean of (r_t - mu_t)(alpha - I(r_t <= mu_t)) / (alpha |mu_t|).
double profile_scaling_factor(std::span<const double> returns, std::span<const double> mu,
                              double alpha);

/// Inverts F = 1 + tau/((1-2 tau) alpha) for tau.
double tau_from_scaling_factor(double factor, double alpha);

}  // namespace escare
