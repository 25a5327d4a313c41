#pragma once

#include <span>
#include <vector>

#include "escare/models.hpp"

namespace escare {

struct LossReport {
  double total = 0.0;
  std::vector<double> per_day;  // empty unless requested
  bool valid = true;            // false when any day is invalid (total is the -inf sentinel)
};

/// Asymmetric least squares: sum |tau - I(r_t < mu_t)| (r_t - mu_t)^2.
double als_objective(std::span<const double> returns, std::span<const double> mu, double tau);

/// AL joint VaR/ES log-likelihood:
///   sum_t [ ln((alpha-1)/ES_t) + (r_t - mu_t)(alpha - I(r_t <= mu_t)) / (alpha ES_t) ].
/// Returns the -inf sentinel (valid = false) when any ES_t >= 0 or mu/ES cross.
LossReport al_loglik(std::span<const double> returns, const RiskPath& path, double alpha,
                     bool per_day = false);

/// Gaussian measurement log-likelihood: -1/2 sum (ln 2pi + ln sigma_u^2 + u^2/sigma_u^2).
double measurement_loglik(std::span<const double> u, double sigma_u);

/// al_loglik + measurement_loglik for Re- family paths (-inf sentinel on
/// invalid path or sigma_u <= 0).
LossReport full_loglik(std::span<const double> returns, const RiskPath& path,
                       const ParamVector& params, double alpha);

/// One-pass recursion + likelihood used by the estimators; equals
/// run_path + full_loglik (al_loglik for families without a measurement
/// equation) and allocates nothing after the workspace warms up.
double path_loglik(const ModelSpec& spec, const ParamVector& p, std::span<const double> returns,
                   std::span<const double> measures, RiskPath& workspace);

/// Standard tick loss: sum (alpha - I(r_t < Q_t)) (r_t - Q_t).
double quantile_loss(std::span<const double> returns, std::span<const double> var_forecasts,
                     double alpha);

/// FZ joint VaR/ES loss with Taylor's G1=0, G2=-1/x choices; equals the
/// negative of al_loglik term by term. Throws when any ES_t >= 0.
double fz_loss(std::span<const double> returns, std::span<const double> var_forecasts,
               std::span<const double> es_forecasts, double alpha);

std::vector<double> fz_loss_per_day(std::span<const double> returns,
                                    std::span<const double> var_forecasts,
                                    std::span<const double> es_forecasts, double alpha);

std::vector<double> quantile_loss_per_day(std::span<const double> returns,
                                          std::span<const double> var_forecasts, double alpha);

}  // namespace escare
